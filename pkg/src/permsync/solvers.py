"""Samplers for :class:`~permsync.encoder.QuboProblem`.

Two exhaustive oracles (all bitstrings, or permutation assignments only), a
single-flip Metropolis simulated annealer and a greedy descent polish.  All
of them return energies computed by :func:`permsync.encoder.energy`.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterable, Mapping

import numpy as np
from numba import njit

from .encoder import DEFAULT_LAMBDA, QuboProblem, as_bits, encode, energies, energy
from .errors import EmptySampleSet, InvalidConfig, SearchSpaceTooLarge, TooManyVariables
from .model import ObservationGraph, vec

MAX_BINARY_VARS = 26
MAX_PERMUTATION_ASSIGNMENTS = 10**7
_CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class Sample:
    bits: np.ndarray
    energy: float
    occurrences: int = 1

    def key(self) -> tuple[int, ...]:
        return tuple(int(b) for b in self.bits)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Distinct samples sorted by energy, then by bitstring."""

    samples: tuple[Sample, ...]
    problem: QuboProblem | None = None
    meta: Mapping = field(default_factory=dict)

    @classmethod
    def from_bits(cls, q: QuboProblem, rows: Iterable, counts: Iterable[int] | None = None, **meta) -> "SampleSet":
        agg: dict[bytes, list] = {}
        rows = list(rows)
        counts = [1] * len(rows) if counts is None else list(counts)
        for row, c in zip(rows, counts):
            x = as_bits(row, q.nvars)
            slot = agg.get(x.tobytes())
            if slot is None:
                agg[x.tobytes()] = [x, int(c)]
            else:
                slot[1] += int(c)
        samples = []
        for x, c in agg.values():
            x.setflags(write=False)
            samples.append(Sample(x, energy(q, x), c))
        samples.sort(key=lambda smp: (smp.energy, smp.key()))
        return cls(tuple(samples), q, dict(meta))

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def first(self) -> Sample:
        if not self.samples:
            raise EmptySampleSet("sample set is empty")
        return self.samples[0]

    @property
    def lowest_energy(self) -> float:
        return self.first.energy

    def contains(self, bits) -> bool:
        key = tuple(int(b) for b in bits)
        return any(smp.key() == key for smp in self.samples)


@dataclass(frozen=True)
class AnnealSchedule:
    beta_start: float = 0.1
    beta_end: float = 10.0
    sweeps: int = 1000

    def __post_init__(self):
        if not 0 < self.beta_start < self.beta_end:
            raise InvalidConfig(f"need 0 < beta_start < beta_end, got {self.beta_start}, {self.beta_end}")
        if self.sweeps < 0:
            raise InvalidConfig("sweeps must be non-negative")

    def betas(self) -> np.ndarray:
        return np.geomspace(self.beta_start, self.beta_end, self.sweeps)


def _keep_best(energy_, keys, top_k, tol_rel=1e-9):
    """Indices of the ``top_k`` best rows plus any near-tie of the k-th."""
    if energy_.size <= top_k:
        return np.arange(energy_.size)
    order = np.lexsort((keys, energy_))
    kth = energy_[order[top_k - 1]]
    tol = tol_rel * max(1.0, abs(kth))
    best = order[energy_[order] < kth - tol]
    near = order[np.abs(energy_[order] - kth) <= tol][:top_k]
    return np.concatenate([best, near])


def _select(q, chunks, top_k, **meta) -> SampleSet:
    pool_bits = np.zeros((0, q.nvars), dtype=np.int8)
    pool_e = np.zeros(0)
    pool_keys = np.zeros(0, dtype=np.int64)
    for keys, rows in chunks:
        e = energies(q, rows)
        pool_bits = np.concatenate([pool_bits, rows])
        pool_e = np.concatenate([pool_e, e])
        pool_keys = np.concatenate([pool_keys, keys])
        keep = _keep_best(pool_e, pool_keys, top_k)
        pool_bits, pool_e, pool_keys = pool_bits[keep], pool_e[keep], pool_keys[keep]
    full = SampleSet.from_bits(q, pool_bits, **meta)
    return SampleSet(full.samples[:top_k], q, full.meta)


def _binary_chunks(nvars: int):
    total = 1 << nvars
    shifts = np.arange(nvars - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        yield idx, ((idx[:, None] >> shifts) & 1).astype(np.int8)


def solve_exhaustive_binary(q: QuboProblem, top_k: int = 1) -> SampleSet:
    """Enumerate all ``2**nvars`` bitstrings; the first sample is the global optimum."""
    if q.nvars > MAX_BINARY_VARS:
        raise TooManyVariables(f"{q.nvars} variables exceeds the cap of {MAX_BINARY_VARS}")
    if top_k < 1:
        raise InvalidConfig("top_k must be at least 1")
    t0 = time.perf_counter()
    out = _select(q, _binary_chunks(q.nvars), top_k, solver="exhaustive", reads=1 << q.nvars)
    out.meta["wall_time_s"] = time.perf_counter() - t0
    return out


def _permutation_vectors(n: int) -> np.ndarray:
    rows = []
    for p in permutations(range(n)):
        dense = np.zeros((n, n), dtype=np.int8)
        dense[np.arange(n), p] = 1
        rows.append(vec(dense))
    rows.sort(key=tuple)
    return np.array(rows, dtype=np.int8).reshape(len(rows), n * n)


def permutation_space_size(n: int, m: int, gauge_fixed: bool = True) -> int:
    return math.factorial(n) ** (m - 1 if gauge_fixed else m)


def solve_exhaustive_permutation(
    g: ObservationGraph,
    lam: float = DEFAULT_LAMBDA,
    gauge_fixed: bool = True,
    top_k: int = 1,
    include_diagonal: bool = True,
) -> SampleSet:
    """Enumerate permutation assignments only, scored with the penalized QUBO energy."""
    views = g.m - 1 if gauge_fixed else g.m
    size = permutation_space_size(g.n, g.m, gauge_fixed)
    if size > MAX_PERMUTATION_ASSIGNMENTS:
        raise SearchSpaceTooLarge(f"{size} assignments exceeds the cap of {MAX_PERMUTATION_ASSIGNMENTS}")
    if top_k < 1:
        raise InvalidConfig("top_k must be at least 1")
    q = encode(g, lam, include_diagonal=include_diagonal, gauge=gauge_fixed)
    vecs = _permutation_vectors(g.n)
    base = vecs.shape[0]

    def chunks():
        for start in range(0, size, _CHUNK):
            idx = np.arange(start, min(start + _CHUNK, size), dtype=np.int64)
            parts, rest = [], idx.copy()
            for _ in range(views):
                parts.append(rest % base)
                rest //= base
            parts.reverse()
            rows = np.concatenate([vecs[d] for d in parts], axis=1) if parts else np.zeros((idx.size, 0), np.int8)
            yield idx, rows

    t0 = time.perf_counter()
    out = _select(q, chunks(), top_k, solver="perm-exhaustive", reads=size)
    out.meta["wall_time_s"] = time.perf_counter() - t0
    return out


@njit(cache=True, nogil=True)
def _anneal(Q, lin, x, betas, uniforms):
    nv = x.size
    field_ = np.zeros(nv)
    for a in range(nv):
        acc = 0.0
        for b in range(nv):
            if b != a and x[b]:
                acc += Q[a, b]
        field_[a] = acc
    tracked = 0.0
    for a in range(nv):
        if x[a]:
            tracked += lin[a] + field_[a]
    for t in range(betas.size):
        beta = betas[t]
        for k in range(nv):
            d = 1 - 2 * x[k]
            delta = d * (lin[k] + 2.0 * field_[k])
            if delta <= 0.0 or uniforms[t, k] < math.exp(-beta * delta):
                x[k] += d
                tracked += delta
                for b in range(nv):
                    if b != k:
                        field_[b] += d * Q[b, k]
    return tracked


def _one_read(q: QuboProblem, betas: np.ndarray, seed: int, read: int):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(read,)))
    x = rng.integers(0, 2, size=q.nvars).astype(np.int64)
    uniforms = rng.random((betas.size, q.nvars))
    tracked = _anneal(q.Q, np.ascontiguousarray(q.linear_terms), x, betas, uniforms)
    return x.astype(np.int8), tracked + q.offset


def sample_sa(
    q: QuboProblem,
    reads: int = 200,
    schedule: AnnealSchedule | None = None,
    seed: int = 0,
    workers: int = 1,
) -> SampleSet:
    """Simulated annealing with ``reads`` independent restarts.

    Read ``r`` draws its initial state and acceptance variates from the
    substream ``SeedSequence(seed, spawn_key=(r,))``, so the result does not
    depend on ``workers``.
    """
    if reads < 1:
        raise InvalidConfig("reads must be at least 1")
    schedule = schedule or AnnealSchedule()
    betas = schedule.betas()
    t0 = time.perf_counter()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda r: _one_read(q, betas, seed, r), range(reads)))
    else:
        results = [_one_read(q, betas, seed, r) for r in range(reads)]
    rows = [x for x, _ in results]
    drift = max((abs(t - energy(q, x)) for x, t in results), default=0.0)
    out = SampleSet.from_bits(
        q, rows, solver="sa", reads=reads, seed=seed, sweeps=schedule.sweeps, tracking_drift=drift
    )
    out.meta["wall_time_s"] = time.perf_counter() - t0
    return out


def flip_deltas(q: QuboProblem, bits) -> np.ndarray:
    """Energy change of flipping each bit of ``bits`` on its own."""
    x = as_bits(bits, q.nvars).astype(np.float64)
    off_diag = q.Q @ x - np.diag(q.Q) * x
    return (1.0 - 2.0 * x) * (q.linear_terms + 2.0 * off_diag)


def greedy_descent(q: QuboProblem, bits) -> np.ndarray:
    """Flip the most improving bit (lowest index on ties) until none improves."""
    x = as_bits(bits, q.nvars).copy()
    current = energy(q, x)
    while x.size:
        deltas = flip_deltas(q, x)
        k = int(np.argmin(deltas))
        if deltas[k] >= 0.0:
            break
        x[k] ^= 1
        new = energy(q, x)
        if new >= current:
            # Rounding noise in the delta; the exact energy did not drop.
            x[k] ^= 1
            break
        current = new
    return x
