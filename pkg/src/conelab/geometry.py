"""Deterministic cone primitives.

Strictly positive matrices acting projectively on the L1 simplex: entrywise
matrix norm, the Hilbert cross-ratio metric, cocycle log-norms, comparability
ratios, and a certified Collatz-Wielandt spectral radius.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    IterationBudgetExceededError,
    NonPositiveEntryError,
)

SIMPLEX_TOL = 1e-12


def _as_positive_matrix(entries) -> np.ndarray:
    a = np.array(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
        raise DimensionMismatchError(f"expected a square d>=2 matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonPositiveEntryError("matrix entries must be finite")
    if np.any(a <= 0.0):
        raise NonPositiveEntryError("matrix entries must be strictly positive")
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PositiveMatrix:
    """A d x d matrix with strictly positive entries."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _as_positive_matrix(self.entries))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, other: "PositiveMatrix") -> "PositiveMatrix":
        return PositiveMatrix(self.entries @ other.entries)

    def scaled(self, c: float) -> "PositiveMatrix":
        if c <= 0:
            raise NonPositiveEntryError("scale factor must be positive")
        return PositiveMatrix(c * self.entries)


@dataclass(frozen=True)
class SimplexPoint:
    """A nonnegative vector of L1 norm one."""

    coords: np.ndarray

    def __post_init__(self):
        a = np.array(self.coords, dtype=float)
        if a.ndim != 1 or a.size < 2:
            raise DimensionMismatchError(f"expected a d>=2 vector, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or np.any(a < 0.0):
            raise NonPositiveEntryError("simplex coordinates must be finite and >= 0")
        if abs(a.sum() - 1.0) > SIMPLEX_TOL:
            raise NonPositiveEntryError(f"coordinates must sum to 1 within {SIMPLEX_TOL}")
        a.flags.writeable = False
        object.__setattr__(self, "coords", a)

    @property
    def dim(self) -> int:
        return self.coords.size

    def interior(self, eps: float) -> bool:
        """True iff every coordinate is at least ``eps``."""
        return bool(self.coords.min() >= eps)


def simplex_point(values) -> SimplexPoint:
    """Normalize a nonnegative, nonzero vector onto the simplex."""
    a = np.asarray(values, dtype=float)
    s = a.sum()
    if not np.isfinite(s) or s <= 0 or np.any(a < 0):
        raise NonPositiveEntryError("need a nonnegative vector with positive sum")
    return SimplexPoint(a / s)


def barycenter(d: int) -> SimplexPoint:
    return SimplexPoint(np.full(d, 1.0 / d))


def matrix_norm(g: PositiveMatrix) -> float:
    """Entrywise L1 norm: the sum of all entries."""
    return float(g.entries.sum())


def log_N(g: PositiveMatrix) -> float:
    """log max(||g||, 1/||g||) = |log ||g|||."""
    return abs(np.log(matrix_norm(g)))


def _m_coeff(u: np.ndarray, v: np.ndarray) -> float:
    # m(u,v) = sup{lam > 0 : lam*v <= u}; coordinates with v_i = 0 impose no
    # constraint, a coordinate with u_i = 0 < v_i forces m = 0.
    mask = v > 0.0
    if not mask.any():
        return 0.0
    return float(np.min(u[mask] / v[mask]))


def hilbert_distance(u: SimplexPoint, v: SimplexPoint) -> float:
    """Hilbert cross-ratio metric d(u,v) = (1 - m(u,v)m(v,u)) / (1 + m(u,v)m(v,u))."""
    p = _m_coeff(u.coords, v.coords) * _m_coeff(v.coords, u.coords)
    return (1.0 - p) / (1.0 + p)


def project_action(g: PositiveMatrix, v: SimplexPoint) -> SimplexPoint:
    """Projective action g.v = gv / ||gv||."""
    w = g.entries @ v.coords
    return SimplexPoint(w / w.sum())


def cocycle_log_norm(g: PositiveMatrix, v: SimplexPoint) -> float:
    """log ||g v|| for the L1 vector norm; gv > 0 so the norm is the plain sum."""
    return float(np.log((g.entries @ v.coords).sum()))


def kesten_ratio(g: PositiveMatrix, columnwise: bool = False) -> float:
    """Comparability ratio of the entries.

    Full mode is max over all entries divided by min over all entries;
    columnwise mode takes the worst max/min ratio within a single column.
    """
    a = g.entries
    if columnwise:
        return float((a.max(axis=0) / a.min(axis=0)).max())
    return float(a.max() / a.min())


def spectral_radius_cw(g: PositiveMatrix, tol: float = 1e-10, max_iter: int = 100000) -> float:
    """Perron root by power iteration with a certified Collatz-Wielandt bracket.

    Iterates the projective action from the barycenter and stops once
    ``max_i (gw)_i/w_i - min_i (gw)_i/w_i <= tol * rho``; the returned value is
    the bracket midpoint, so its relative error is at most tol/2.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = g.entries
    w = np.full(g.dim, 1.0 / g.dim)
    for _ in range(max_iter):
        z = a @ w
        ratios = z / w
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi - lo <= tol * hi:
            return 0.5 * (lo + hi)
        w = z / z.sum()
    raise IterationBudgetExceededError(
        f"Collatz-Wielandt gap did not reach tol={tol} within {max_iter} iterations"
    )


def batch_spectral_radius(mats: np.ndarray, tol: float = 1e-10, max_iter: int = 10000) -> np.ndarray:
    """Vectorized Collatz-Wielandt power iteration over a (P, d, d) stack.

    Same bracket criterion as :func:`spectral_radius_cw`; paths that have
    converged stop updating. Positive products contract fast, so a handful of
    iterations normally suffices.
    """
    m = np.asarray(mats, dtype=float)
    p, d = m.shape[0], m.shape[1]
    w = np.full((p, d), 1.0 / d)
    out = np.empty(p)
    active = np.ones(p, dtype=bool)
    for _ in range(max_iter):
        z = np.einsum("pij,pj->pi", m[active], w[active])
        ratios = z / w[active]
        lo, hi = ratios.min(axis=1), ratios.max(axis=1)
        done = hi - lo <= tol * hi
        idx = np.flatnonzero(active)
        out[idx[done]] = 0.5 * (lo[done] + hi[done])
        w[idx[~done]] = z[~done] / z[~done].sum(axis=1, keepdims=True)
        active[idx[done]] = False
        if not active.any():
            return out
    raise IterationBudgetExceededError(
        f"batched Collatz-Wielandt did not converge within {max_iter} iterations"
    )
