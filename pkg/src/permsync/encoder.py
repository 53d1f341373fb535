"""QUBO encoding of permutation synchronization.

The objective couples view blocks with ``-(I kron P_ij)`` so that, for
column-major ``x_i = vec(X_i)``, ``x^T Q' x = -sum tr(X_i^T P_ij X_j)``.
Permutation-ness enters as the penalty ``lam * ||A x - b||^2`` with

    A_i = [[I kron 1^T], [1^T kron I]],  b = 1.

Energies carry an explicit constant offset so that the penalized energy of
any bitstring equals its objective energy plus the exact constraint
residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from itertools import chain
from typing import Sequence

import numpy as np

from .errors import AlreadyGauged, DimensionMismatch, LengthMismatch
from .model import ObservationGraph, Permutation, SyncEstimate, is_permutation_matrix, unvec, vec

DEFAULT_LAMBDA = 2.5


def _frozen(a, dtype=np.float64) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GaugeInfo:
    fixed_view: int
    n: int
    m: int


@dataclass(frozen=True, eq=False)
class QuboProblem:
    """Minimize ``x^T Q x + s^T x + offset`` over binary ``x``.

    ``Q`` is kept dense and symmetric.  ``n``/``m`` describe the view layout
    when the problem came from a graph (``None`` for a bare QUBO).
    """

    Q: np.ndarray
    s: np.ndarray
    offset: float = 0.0
    n: int | None = None
    m: int | None = None
    gauge: GaugeInfo | None = None

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=np.float64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise DimensionMismatch(f"Q must be square, got shape {Q.shape}")
        if not np.array_equal(Q, Q.T):
            raise DimensionMismatch("Q must be exactly symmetric")
        s = np.asarray(self.s, dtype=np.float64)
        if s.shape != (Q.shape[0],):
            raise DimensionMismatch(f"s has shape {s.shape}, expected ({Q.shape[0]},)")
        object.__setattr__(self, "Q", _frozen(Q))
        object.__setattr__(self, "s", _frozen(s))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def nvars(self) -> int:
        return self.Q.shape[0]

    @property
    def views_encoded(self) -> int:
        """Number of views whose bits are free variables."""
        if self.n is None or self.m is None:
            raise DimensionMismatch("problem carries no view layout")
        return self.m - (1 if self.gauge is not None else 0)

    @cached_property
    def linear_terms(self) -> np.ndarray:
        """Coefficient of ``x_a`` alone: ``Q_aa + s_a``."""
        return _frozen(np.diag(self.Q) + self.s)

    @cached_property
    def coupling_terms(self) -> np.ndarray:
        """Strict upper triangle of ``2 Q``: coefficient of ``x_a x_b`` for ``a < b``."""
        return _frozen(np.triu(2.0 * self.Q, k=1))

    def triplets(self) -> list[tuple[int, int, float]]:
        """Nonzero upper-triangle coefficients ``(a, b, c)`` in row-major order."""
        out = []
        lin = self.linear_terms
        up = self.coupling_terms
        for a in range(self.nvars):
            if lin[a] != 0.0:
                out.append((a, a, float(lin[a])))
            for b in np.flatnonzero(up[a]):
                out.append((a, int(b), float(up[a, b])))
        return out

    def scaled(self, factor: float) -> "QuboProblem":
        return replace(self, Q=self.Q * factor, s=self.s * factor, offset=self.offset * factor)


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    A: np.ndarray
    b: np.ndarray
    lam: float = DEFAULT_LAMBDA

    def residual(self, bits) -> np.ndarray:
        return self.A @ np.asarray(bits, dtype=np.float64) - self.b


def as_bits(bits, length: int | None = None) -> np.ndarray:
    x = np.asarray(bits)
    if x.ndim != 1:
        raise LengthMismatch(f"bit vector must be one-dimensional, got shape {x.shape}")
    if not np.all((x == 0) | (x == 1)):
        raise LengthMismatch("bit vector entries must be 0 or 1")
    if length is not None and x.size != length:
        raise LengthMismatch(f"expected {length} bits, got {x.size}")
    return x.astype(np.int8)


def energy(q: QuboProblem, bits) -> float:
    """Energy of one bitstring.

    Summed with :func:`math.fsum` over the offset, the active linear terms and
    the active couplings, so the result is correctly rounded and independent
    of term order.
    """
    x = as_bits(bits, q.nvars)
    idx = np.flatnonzero(x)
    lin = q.linear_terms[idx]
    up = q.coupling_terms[np.ix_(idx, idx)][np.triu_indices(idx.size, k=1)]
    return math.fsum(chain((q.offset,), lin.tolist(), up.tolist()))


def energies(q: QuboProblem, batch) -> np.ndarray:
    """Vectorized energies for rows of ``batch``; may differ from :func:`energy` in the last bits."""
    B = np.asarray(batch, dtype=np.float64)
    if B.ndim != 2 or B.shape[1] != q.nvars:
        raise LengthMismatch(f"batch must have shape (k, {q.nvars})")
    return np.einsum("ka,ka->k", B @ q.Q, B) + B @ q.s + q.offset


def build_objective(g: ObservationGraph, include_diagonal: bool = True) -> QuboProblem:
    n, m = g.n, g.m
    nn = n * n
    Q = np.zeros((m * nn, m * nn))
    eye = np.eye(n)
    for (i, j), p in g.edges.items():
        Q[i * nn:(i + 1) * nn, j * nn:(j + 1) * nn] -= np.kron(eye, p.dense(np.float64))
    if include_diagonal:
        for i in range(m):
            Q[i * nn:(i + 1) * nn, i * nn:(i + 1) * nn] -= np.eye(nn)
    return QuboProblem(Q, np.zeros(m * nn), 0.0, n=n, m=m)


def constraint_block(n: int) -> np.ndarray:
    """Per-view matrix whose rows sum the columns, then the rows, of ``unvec(x_i)``."""
    a = np.zeros((2 * n, n * n), dtype=np.int8)
    for j in range(n):
        a[j, j * n:(j + 1) * n] = 1
        a[n + j, j + n * np.arange(n)] = 1
    return a


def build_constraints(n: int, m: int, lam: float = DEFAULT_LAMBDA) -> ConstraintSystem:
    A = np.kron(np.eye(m, dtype=np.int8), constraint_block(n)).astype(np.int8)
    A.setflags(write=False)
    return ConstraintSystem(A, _frozen(np.ones(2 * n * m)), float(lam))


def apply_penalty(q: QuboProblem, c: ConstraintSystem) -> QuboProblem:
    """Fold ``lam * ||A x - b||^2`` into ``(Q, s, offset)``."""
    if q.gauge is not None:
        raise DimensionMismatch("apply the penalty before fixing the gauge")
    if c.A.shape[1] != q.nvars or c.A.shape[0] != c.b.size:
        raise DimensionMismatch(f"A has shape {c.A.shape}, problem has {q.nvars} variables")
    A = c.A.astype(np.float64)
    Q = q.Q + c.lam * (A.T @ A)
    s = q.s - 2.0 * c.lam * (A.T @ c.b)
    return replace(q, Q=Q, s=s, offset=q.offset + c.lam * float(c.b @ c.b))


def fix_gauge(q: QuboProblem, n: int | None = None, m: int | None = None) -> QuboProblem:
    """Clamp view 0 to the identity and fold its terms into ``s`` and ``offset``."""
    if q.gauge is not None:
        raise AlreadyGauged("problem is already gauge-fixed")
    n = q.n if n is None else n
    m = q.m if m is None else m
    if n is None or m is None or q.nvars != m * n * n:
        raise DimensionMismatch(f"problem with {q.nvars} variables is not m*n^2 for n={n}, m={m}")
    k = n * n
    x1 = vec(np.eye(n))
    Q11, Q1r, Qrr = q.Q[:k, :k], q.Q[:k, k:], q.Q[k:, k:]
    s = q.s[k:] + 2.0 * (Q1r.T @ x1)
    offset = q.offset + float(x1 @ Q11 @ x1) + float(q.s[:k] @ x1)
    return QuboProblem(Qrr, s, offset, n=n, m=m, gauge=GaugeInfo(0, n, m))


def encode(
    g: ObservationGraph,
    lam: float = DEFAULT_LAMBDA,
    include_diagonal: bool = True,
    gauge: bool = True,
) -> QuboProblem:
    """Objective, penalty and (optionally) gauge fixing in one call."""
    q = apply_penalty(build_objective(g, include_diagonal), build_constraints(g.n, g.m, lam))
    return fix_gauge(q) if gauge else q


def bits_from_views(views: Sequence, q: QuboProblem) -> np.ndarray:
    """Bitstring of ``q`` encoding the given per-view matrices (or permutations).

    For a gauged problem the fixed view is dropped.
    """
    mats = [v.dense() if isinstance(v, Permutation) else np.asarray(v) for v in views]
    if q.gauge is not None:
        mats = mats[1:]
    if not mats:
        return np.zeros(0, dtype=np.int8)
    return as_bits(np.concatenate([vec(a) for a in mats]), q.nvars)


def decode(bits, q: QuboProblem, source: str = "") -> SyncEstimate:
    x = as_bits(bits, q.nvars)
    n = q.n
    if n is None:
        raise DimensionMismatch("problem carries no view layout")
    k = n * n
    views = [unvec(x[t * k:(t + 1) * k], n) for t in range(q.views_encoded)]
    if q.gauge is not None:
        views.insert(q.gauge.fixed_view, np.eye(n, dtype=np.int8))
    return SyncEstimate(tuple(views), tuple(is_permutation_matrix(v) for v in views), source)
