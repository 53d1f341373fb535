"""Permutations, observation graphs and the vectorization convention.

A permutation of size ``n`` is stored as a map ``p`` with ``p[r] = c`` meaning
the dense matrix has a one at ``(r, c)``.  Views are indexed from 0.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    AsymmetricLabels,
    Disconnected,
    NotBinary,
    NotDoublyStochasticBinary,
    NotSquare,
    SizeMismatch,
)

Edge = tuple[int, int]


@dataclass(frozen=True)
class Permutation:
    map: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(c) for c in self.map)
        if sorted(m) != list(range(len(m))):
            raise NotDoublyStochasticBinary(f"map {list(m)} is not a bijection")
        object.__setattr__(self, "map", m)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @property
    def size(self) -> int:
        return len(self.map)

    def dense(self, dtype=np.int8) -> np.ndarray:
        out = np.zeros((self.size, self.size), dtype=dtype)
        out[np.arange(self.size), self.map] = 1
        return out

    def transpose(self) -> "Permutation":
        inv = [0] * self.size
        for r, c in enumerate(self.map):
            inv[c] = r
        return Permutation(tuple(inv))

    inverse = transpose

    def __matmul__(self, other: "Permutation") -> "Permutation":
        """Matrix product ``self @ other`` carried out on maps."""
        if other.size != self.size:
            raise SizeMismatch(f"sizes {self.size} and {other.size}")
        return Permutation(tuple(other.map[c] for c in self.map))

    def is_identity(self) -> bool:
        return self.map == tuple(range(self.size))


def validate_permutation(dense) -> Permutation:
    """Convert a dense 0/1 matrix to a :class:`Permutation`.

    Raises NotSquare, NotBinary or NotDoublyStochasticBinary.
    """
    a = np.asarray(dense)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {a.shape}")
    if not np.all((a == 0) | (a == 1)):
        raise NotBinary("entries must be 0 or 1")
    if np.any(a.sum(axis=0) != 1) or np.any(a.sum(axis=1) != 1):
        raise NotDoublyStochasticBinary("every row and column must sum to one")
    return Permutation(tuple(int(c) for c in np.argmax(a, axis=1)))


def is_permutation_matrix(dense) -> bool:
    try:
        validate_permutation(dense)
    except (NotSquare, NotBinary, NotDoublyStochasticBinary):
        return False
    return True


def relative_of(xi: Permutation, xj: Permutation) -> Permutation:
    """Relative permutation ``Xi @ Xj.T``."""
    if xi.size != xj.size:
        raise SizeMismatch(f"sizes {xi.size} and {xj.size}")
    return xi @ xj.transpose()


def vec(x) -> np.ndarray:
    """Column-major stacking of a square matrix."""
    a = np.asarray(x)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SizeMismatch(f"expected a square matrix, got shape {a.shape}")
    return a.reshape(-1, order="F").copy()


def unvec(v, n: int) -> np.ndarray:
    a = np.asarray(v)
    if a.ndim != 1 or a.size != n * n:
        raise SizeMismatch(f"vector of length {a.size} cannot form a {n}x{n} matrix")
    return a.reshape((n, n), order="F").copy()


@dataclass(frozen=True)
class ObservationGraph:
    """Views ``0..m-1`` with ``n`` points each and relative permutations on edges.

    Use :func:`validate_graph` (or :meth:`build`) to obtain a closed, connected
    graph; the raw constructor performs no checks.
    """

    n: int
    m: int
    edges: Mapping[Edge, Permutation] = field(default_factory=dict)

    def __post_init__(self):
        ordered = dict(sorted(self.edges.items()))
        object.__setattr__(self, "edges", MappingProxyType(ordered))

    @classmethod
    def build(cls, n: int, m: int, edges: Mapping[Edge, Permutation] | Iterable[tuple[Edge, Permutation]]):
        return validate_graph(cls(n, m, dict(edges)))

    def undirected_edges(self) -> list[Edge]:
        return [e for e in self.edges if e[0] < e[1]]

    def __eq__(self, other):
        if not isinstance(other, ObservationGraph):
            return NotImplemented
        return self.n == other.n and self.m == other.m and dict(self.edges) == dict(other.edges)

    def __hash__(self):
        return hash((self.n, self.m, tuple(self.edges.items())))


def _connected(m: int, edges: Iterable[Edge]) -> bool:
    if m <= 1:
        return True
    adj: dict[int, list[int]] = {v: [] for v in range(m)}
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == m


def validate_graph(g: ObservationGraph) -> ObservationGraph:
    """Close ``g`` under transposition and check labels and connectivity."""
    if g.n < 1 or g.m < 1:
        raise SizeMismatch(f"need n >= 1 and m >= 1, got n={g.n}, m={g.m}")
    closed: dict[Edge, Permutation] = {}
    for (i, j), p in g.edges.items():
        if not (0 <= i < g.m and 0 <= j < g.m):
            raise SizeMismatch(f"edge ({i}, {j}) outside views 0..{g.m - 1}")
        if i == j:
            raise SizeMismatch(f"self-loop on view {i}")
        if p.size != g.n:
            raise SizeMismatch(f"edge ({i}, {j}) has size {p.size}, expected {g.n}")
        closed[(i, j)] = p
    for (i, j), p in list(closed.items()):
        q = closed.get((j, i))
        if q is None:
            closed[(j, i)] = p.transpose()
        elif q != p.transpose():
            raise AsymmetricLabels(f"label on ({j}, {i}) is not the transpose of ({i}, {j})")
    if not _connected(g.m, closed):
        raise Disconnected(f"views do not form a connected graph (m={g.m})")
    return ObservationGraph(g.n, g.m, closed)


def graph_from_absolutes(absolutes: Sequence[Permutation], edges: Iterable[Edge] | None = None) -> ObservationGraph:
    """Noise-free graph with ``P_ij = X_i X_j^T`` on the given (default: all) edges."""
    m = len(absolutes)
    n = absolutes[0].size
    if edges is None:
        edges = [(i, j) for i in range(m) for j in range(m) if i != j]
    return validate_graph(
        ObservationGraph(n, m, {(i, j): relative_of(absolutes[i], absolutes[j]) for i, j in edges})
    )


@dataclass(frozen=True, eq=False)
class SyncEstimate:
    """Decoded per-view matrices; ``valid[i]`` says whether view ``i`` is a permutation."""

    views: tuple[np.ndarray, ...]
    valid: tuple[bool, ...]
    source: str = ""

    def __post_init__(self):
        views = []
        for v in self.views:
            a = np.array(v, dtype=np.int8)
            a.setflags(write=False)
            views.append(a)
        object.__setattr__(self, "views", tuple(views))
        object.__setattr__(self, "valid", tuple(bool(b) for b in self.valid))

    @classmethod
    def from_permutations(cls, perms: Sequence[Permutation], source: str = "") -> "SyncEstimate":
        return cls(tuple(p.dense() for p in perms), (True,) * len(perms), source)

    @property
    def all_valid(self) -> bool:
        return all(self.valid)

    def permutations(self) -> list[Permutation]:
        return [validate_permutation(v) for v in self.views]
