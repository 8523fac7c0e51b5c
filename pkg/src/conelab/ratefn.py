"""Log-eigenvalue curve, its derivatives, and the convex-dual rate function.

Lambda(s) = log kappa(s) is sampled from spectral solves and interpolated by
a cubic spline. Spline derivatives are cross-checked against solver-based
central differences; the Legendre transform inverts the increasing derivative
by bisection with a Newton polish; the Cramer series uses derivatives up to
order five (orders four and five by differencing the spline, which only feed
small correction terms).
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .ensemble import FiniteEnsemble
from .errors import DerivativeUnstableError, NonConvexCurveWarning, QOutOfRangeError
from .grid import SimplexGrid
from .spectral import solve_spectral

FD_STEP = 1e-3
HIGH_ORDER_STEP = 5e-2
CONVEXITY_SLACK = 1e-8
DEFAULT_S_SAMPLES = np.linspace(-2.0, 2.0, 41)


@dataclass
class CumulantTable:
    """Sampled Lambda with spline derivatives and the central cumulants.

    fd_check records, at a few anchor points, the solver-based finite
    differences next to the spline values ("both sides" of the cross-check)
    and their largest gaps.
    """

    s_samples: np.ndarray
    Lambda: np.ndarray
    lambda1: float = field(init=False)
    sigma2: float = field(init=False)
    m3: float = field(init=False)
    fd_check: dict = field(default_factory=dict)
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        order = np.argsort(self.s_samples)
        self.s_samples = np.asarray(self.s_samples, dtype=float)[order]
        self.Lambda = np.asarray(self.Lambda, dtype=float)[order]
        self._spline = CubicSpline(self.s_samples, self.Lambda)
        second = np.diff(self.Lambda, 2)
        if second.min() < -CONVEXITY_SLACK:
            warnings.warn(
                f"sampled curve has a negative second difference ({second.min():.3e})",
                NonConvexCurveWarning,
            )
        self.lambda1 = self.dLam(0.0, 1)
        self.sigma2 = self.dLam(0.0, 2)
        self.m3 = self.dLam(0.0, 3)

    @property
    def s_min(self) -> float:
        return float(self.s_samples[0])

    @property
    def s_max(self) -> float:
        return float(self.s_samples[-1])

    def Lam(self, s):
        return self._spline(s)

    def dLam(self, s, order: int = 1):
        """Spline derivative for orders 1-3; differenced spline for 4-5.

        The cubic's third derivative is piecewise constant, so order 3 is read
        as the two-sided average half a sample step away, which centers it at s.
        """
        if order in (1, 2):
            return float(self._spline(s, order))
        if order == 3:
            half = 0.5 * float(np.min(np.diff(self.s_samples)))
            return 0.5 * float(self._spline(s - half, 3) + self._spline(s + half, 3))
        if order in (4, 5):
            return self._high_order(s, order)
        raise ValueError("orders 1..5 supported")

    def _high_order(self, s, order, h: float = HIGH_ORDER_STEP):
        d2 = lambda t: float(self._spline(t, 2))

        def fd(step):
            if order == 4:
                return (d2(s + step) - 2.0 * d2(s) + d2(s - step)) / step**2
            return (
                d2(s + 2 * step) - 2.0 * d2(s + step) + 2.0 * d2(s - step) - d2(s - 2 * step)
            ) / (2.0 * step**3)

        return (4.0 * fd(h / 2) - fd(h)) / 3.0

    def sigma_s(self, s) -> float:
        """sigma_s = sqrt(Lambda''(s)), the tilted standard deviation."""
        v = self.dLam(s, 2)
        if v < 1e-10:
            raise DerivativeUnstableError(f"Lambda''({s}) = {v:.3e} too small")
        return math.sqrt(v)

    def gamma(self, order: int, s: float = 0.0) -> float:
        return self.dLam(s, order)


def lambda_curve(
    ens: FiniteEnsemble,
    grid: SimplexGrid,
    s_samples=None,
    tol: float = 1e-10,
    fd_check_points=(0.0, -1.0, -0.5, 0.5, 1.0),
) -> CumulantTable:
    """Sample log kappa on s_samples and build the derivative table.

    s_samples must contain 0 (the curve is anchored by Lambda(0) = 0). The
    finite-difference cross-check solves four extra eigenproblems around each
    anchor point with step 1e-3 plus one halving (Richardson).
    """
    samples = np.asarray(DEFAULT_S_SAMPLES if s_samples is None else s_samples, dtype=float)
    if not np.any(np.isclose(samples, 0.0, atol=1e-15)):
        raise ValueError("s_samples must include 0")
    lam = np.array([solve_spectral(ens, float(s), grid, tol=tol).log_kappa for s in samples])
    table = CumulantTable(samples, lam)

    lo, hi = table.s_min + 2 * FD_STEP, table.s_max - 2 * FD_STEP
    anchors = [s for s in fd_check_points if lo <= s <= hi]
    kap = lambda s: solve_spectral(ens, float(s), grid, tol=tol).log_kappa
    fd1, sp1, fd3, sp3 = [], [], [], []
    for s in anchors:
        d = lambda h: (kap(s + h) - kap(s - h)) / (2 * h)
        fd1.append((4.0 * d(FD_STEP / 2) - d(FD_STEP)) / 3.0)
        sp1.append(table.dLam(s, 1))
        h3 = HIGH_ORDER_STEP / 2
        fd3.append(
            (kap(s + 2 * h3) - 2 * kap(s + h3) + 2 * kap(s - h3) - kap(s - 2 * h3)) / (2 * h3**3)
        )
        sp3.append(table.dLam(s, 3))
    table.fd_check = {
        "anchors": list(anchors),
        "fd_d1": fd1,
        "spline_d1": sp1,
        "fd_d3": fd3,
        "spline_d3": sp3,
        "max_gap_d1": max((abs(a - b) for a, b in zip(fd1, sp1)), default=0.0),
        "max_gap_d3": max((abs(a - b) for a, b in zip(fd3, sp3)), default=0.0),
    }
    return table


def cumulants(table: CumulantTable) -> tuple[float, float, float]:
    """(Lambda'(0), Lambda''(0), Lambda'''(0)): drift, variance, third cumulant."""
    return table.lambda1, table.sigma2, table.m3


def legendre(table: CumulantTable, q: float) -> tuple[float, float]:
    """Solve Lambda'(s) = q and return (s*, Lambda*(q) = s* q - Lambda(s*)).

    Lambda' is increasing by convexity, so a bisection bracket always shrinks;
    a Newton polish sharpens the root to ~1e-14.
    """
    lo, hi = table.s_min, table.s_max
    qlo, qhi = table.dLam(lo, 1), table.dLam(hi, 1)
    if not (qlo <= q <= qhi):
        raise QOutOfRangeError(f"q={q} outside the tabulated derivative range [{qlo}, {qhi}]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if table.dLam(mid, 1) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    s = 0.5 * (lo + hi)
    for _ in range(4):
        curv = table.dLam(s, 2)
        if curv <= 0:
            break
        step = (table.dLam(s, 1) - q) / curv
        s_new = min(max(s - step, table.s_min), table.s_max)
        if abs(s_new - s) < 1e-15:
            s = s_new
            break
        s = s_new
    return float(s), float(s * q - table.Lam(s))


def cramer_series(table: CumulantTable, s: float, t: float) -> float:
    """Truncated Cramer series zeta_s(t) from gamma_k = Lambda^(k)(s), k = 2..5."""
    g2 = table.gamma(2, s)
    if g2 < 1e-10:
        raise DerivativeUnstableError(f"gamma_2({s}) = {g2:.3e}: series undefined")
    g3, g4, g5 = table.gamma(3, s), table.gamma(4, s), table.gamma(5, s)
    c0 = g3 / (6.0 * g2**1.5)
    c1 = (g4 * g2 - 3.0 * g3**2) / (24.0 * g2**3)
    c2 = (g5 * g2**2 - 10.0 * g4 * g3 * g2 + 15.0 * g3**3) / (120.0 * g2**4.5)
    return c0 + c1 * t + c2 * t * t


def export_cumulants_csv(table: CumulantTable, path) -> None:
    """Columns: s, Lambda, Lambda', Lambda'', Lambda'''."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s", "Lambda", "dLambda", "d2Lambda", "d3Lambda"])
        for s in table.s_samples:
            writer.writerow(
                [
                    f"{s:.17g}",
                    f"{float(table.Lam(s)):.17g}",
                    f"{table.dLam(s, 1):.17g}",
                    f"{table.dLam(s, 2):.17g}",
                    f"{table.dLam(s, 3):.17g}",
                ]
            )


def export_legendre_csv(table: CumulantTable, qs, path) -> None:
    """Columns: q, s_star, rate."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["q", "s_star", "rate"])
        for q in qs:
            s, rate = legendre(table, float(q))
            writer.writerow([f"{float(q):.17g}", f"{s:.17g}", f"{rate:.17g}"])


def lyapunov_exponent(ens: FiniteEnsemble, grid: SimplexGrid, tol: float = 1e-10) -> float:
    """Lambda'(0) by a Richardson central difference of log kappa (one halving)."""

    def d(h):
        hi = solve_spectral(ens, h, grid, tol=tol).log_kappa
        lo = solve_spectral(ens, -h, grid, tol=tol).log_kappa
        return (hi - lo) / (2 * h)

    return (4.0 * d(FD_STEP / 2) - d(FD_STEP)) / 3.0
