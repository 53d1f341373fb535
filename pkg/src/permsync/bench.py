"""Synthetic instances, accuracy metrics and majority-vote correction."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .encoder import QuboProblem, decode
from .errors import EmptySampleSet, InvalidConfig, InvalidEstimate, ShapeMismatch
from .model import Edge, ObservationGraph, Permutation, SyncEstimate, relative_of, validate_graph
from .solvers import SampleSet


@dataclass(frozen=True)
class SynthConfig:
    n: int
    m: int
    completeness: float = 1.0
    swap_ratio: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise InvalidConfig(f"need n >= 1 and m >= 1, got n={self.n}, m={self.m}")
        if not 0.5 < self.completeness <= 1.0:
            raise InvalidConfig(f"completeness must lie in (0.5, 1], got {self.completeness}")
        if not 0.0 <= self.swap_ratio <= 0.25:
            raise InvalidConfig(f"swap ratio must lie in [0, 0.25], got {self.swap_ratio}")

    @property
    def swaps_per_edge(self) -> int:
        # Round half up: sigma * n = 0.5 means one swap.
        return int(math.floor(self.swap_ratio * self.n + 0.5))

    @property
    def kept_undirected_edges(self) -> int:
        total = self.m * (self.m - 1) // 2
        return min(total, max(self.m - 1, int(math.floor(self.completeness * total + 0.5))))


@dataclass(frozen=True)
class GroundTruth:
    absolutes: tuple[Permutation, ...]

    @property
    def views(self) -> tuple[np.ndarray, ...]:
        return tuple(p.dense() for p in self.absolutes)

    def estimate(self) -> SyncEstimate:
        return SyncEstimate.from_permutations(self.absolutes, "ground-truth")


def _random_permutation(rng: np.random.Generator, n: int) -> Permutation:
    return Permutation(tuple(int(c) for c in rng.permutation(n)))


def _choose_edges(cfg: SynthConfig, rng: np.random.Generator) -> list[Edge]:
    """Random spanning tree, topped up with random extra edges."""
    m = cfg.m
    order = rng.permutation(m)
    kept = set()
    for t in range(1, m):
        a, b = int(order[t]), int(order[rng.integers(t)])
        kept.add((min(a, b), max(a, b)))
    rest = [(i, j) for i in range(m) for j in range(i + 1, m) if (i, j) not in kept]
    extra = cfg.kept_undirected_edges - len(kept)
    for idx in sorted(rng.choice(len(rest), size=extra, replace=False)) if extra > 0 else []:
        kept.add(rest[int(idx)])
    return sorted(kept)


def _transposition(n: int, a: int, b: int) -> Permutation:
    p = list(range(n))
    p[a], p[b] = p[b], p[a]
    return Permutation(tuple(p))


def observe(absolutes: Sequence[Permutation], cfg: SynthConfig, rng: np.random.Generator) -> ObservationGraph:
    """Pairwise observations of ``absolutes``: drop edges, then swap rows.

    Each kept undirected edge ``i < j`` gets ``P_ij = T_k ... T_1 X_i X_j^T``
    for random row transpositions ``T``; ``P_ji`` is its transpose.
    """
    n = cfg.n
    edges: dict[Edge, Permutation] = {}
    for i, j in _choose_edges(cfg, rng):
        p = relative_of(absolutes[i], absolutes[j])
        for _ in range(cfg.swaps_per_edge if n > 1 else 0):
            a, b = rng.choice(n, size=2, replace=False)
            p = _transposition(n, int(a), int(b)) @ p
        edges[(i, j)] = p
    return validate_graph(ObservationGraph(n, cfg.m, edges))


def generate(cfg: SynthConfig) -> tuple[GroundTruth, ObservationGraph]:
    """Deterministic synthetic instance for ``cfg``; view 0 is the identity."""
    abs_seq, obs_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    rng = np.random.default_rng(abs_seq)
    absolutes = (Permutation.identity(cfg.n),) + tuple(_random_permutation(rng, cfg.n) for _ in range(cfg.m - 1))
    graph = observe(absolutes, cfg, np.random.default_rng(obs_seq))
    return GroundTruth(absolutes), graph


def _views(x) -> list[np.ndarray]:
    views = x.views if hasattr(x, "views") else x
    return [np.asarray(v) for v in views]


def accuracy(est, gt) -> float:
    """Fraction of agreeing bits over all views (the fixed view included)."""
    a, b = _views(est), _views(gt)
    if len(a) != len(b) or any(u.shape != v.shape for u, v in zip(a, b)):
        raise ShapeMismatch("estimate and ground truth differ in shape")
    total = sum(u.size for u in a)
    if total == 0:
        return 1.0
    wrong = sum(int(np.count_nonzero(np.logical_xor(u, v))) for u, v in zip(a, b))
    return 1.0 - wrong / total


def consistency_error(g: ObservationGraph, est) -> float:
    """Sum of squared Frobenius residuals ``||P_ij - X_i X_j^T||^2`` over ordered edges."""
    if isinstance(est, SyncEstimate) and not est.all_valid:
        raise InvalidEstimate("every view must be a permutation")
    views = _views(est)
    if len(views) != g.m:
        raise ShapeMismatch(f"estimate has {len(views)} views, graph has {g.m}")
    total = 0
    for (i, j), p in g.edges.items():
        r = p.dense(np.int64) - views[i].astype(np.int64) @ views[j].astype(np.int64).T
        total += int(np.sum(r * r))
    return float(total)


def vote_bits(samples: SampleSet, k: int) -> np.ndarray:
    """Bitwise occurrence-weighted majority over the ``k`` lowest-energy samples.

    Ties take the bit of the lowest-energy sample.
    """
    if not samples.samples:
        raise EmptySampleSet("cannot vote on an empty sample set")
    if k < 1:
        raise InvalidConfig("k must be at least 1")
    top = samples.samples[:k]
    bits = np.array([s.bits for s in top], dtype=np.int64).reshape(len(top), -1)
    w = np.array([s.occurrences for s in top], dtype=np.int64)
    ones = w @ bits
    zeros = w.sum() - ones
    return np.where(ones > zeros, 1, np.where(ones < zeros, 0, top[0].bits)).astype(np.int8)


def majority_vote(samples: SampleSet, k: int, q: QuboProblem | None = None) -> SyncEstimate:
    """Decode :func:`vote_bits`; with ``k=1`` this is the best sample's decoding."""
    q = q if q is not None else samples.problem
    return decode(vote_bits(samples, k), q, source=f"majority-vote k={k}")
