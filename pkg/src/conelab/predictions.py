"""Closed-form prediction formulas evaluated from spectral and cumulant data.

Every harness prediction funnels through one of these pure functions, so a
report can be re-derived from dumped spectral/cumulant CSVs alone.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

SQRT_2PI = math.sqrt(2.0 * math.pi)


def gaussian_cdf(y):
    return ndtr(y)


def gaussian_pdf(y):
    return np.exp(-0.5 * np.square(y)) / SQRT_2PI


def edgeworth_cdf(y, n: int, sigma: float, m3: float, drift: float):
    """First-order corrected CDF for the standardized log observable.

    Phi(y) + m3/(6 sigma^3 sqrt(n)) (1 - y^2) phi(y) - drift/(sigma sqrt(n)) phi(y),
    where drift is b(v) + d(f) for coefficients, b(v) for vector norms and
    b(ones) for the matrix norm (d(ones) = 0).
    """
    y = np.asarray(y, dtype=float)
    root = math.sqrt(n)
    phi = gaussian_pdf(y)
    return gaussian_cdf(y) + m3 / (6.0 * sigma**3 * root) * (1.0 - y * y) * phi - drift / (
        sigma * root
    ) * phi


def brp_tail(n: int, s: float, rate: float, sigma_s: float, prefactor: float) -> float:
    """Sharp tail asymptotic: prefactor * exp(-n rate) / (|s| sigma_s sqrt(2 pi n)).

    prefactor carries the spectral data, e.g. r_s(v) r_s*(f) / nu_s(r_s) for
    coefficients and 1 / nu_s(r_s) for the matrix norm.
    """
    return prefactor * math.exp(-n * rate) / (abs(s) * sigma_s * math.sqrt(2.0 * math.pi * n))


def llt_window(n: int, sigma: float, a1: float, a2: float, nu_phi: float = 1.0) -> float:
    """Central window mass: (a2 - a1) / (sigma sqrt(2 pi n)) * nu(phi)."""
    return (a2 - a1) / (sigma * math.sqrt(2.0 * math.pi * n)) * nu_phi


def llt_moderate(
    n: int, sigma: float, a1: float, a2: float, l: float, zeta_l: float, nu_phi: float = 1.0
) -> float:
    """Moderate-deviation window mass with the Cramer correction e^{-nl^2/2 + nl^3 zeta(l)}."""
    return llt_window(n, sigma, a1, a2, nu_phi) * math.exp(-n * l * l / 2.0 + n * l**3 * zeta_l)


def tilted_interval_factor(s: float, a1: float, a2: float) -> float:
    """(e^{-s a1} - e^{-s a2}) / s, continuously extended by a2 - a1 at s = 0."""
    if a2 <= a1:
        raise ValueError("need a1 < a2")
    scale = abs(s) * max(abs(a1), abs(a2))
    if scale < 1e-6:
        # series in s: (a2 - a1) - s (a2^2 - a1^2)/2 + s^2 (a2^3 - a1^3)/6 - s^3 (a2^4 - a1^4)/24
        return (
            (a2 - a1)
            - s * (a2**2 - a1**2) / 2.0
            + s**2 * (a2**3 - a1**3) / 6.0
            - s**3 * (a2**4 - a1**4) / 24.0
        )
    return (math.exp(-s * a1) - math.exp(-s * a2)) / s


def llt_large_deviation(
    n: int,
    s: float,
    rate: float,
    sigma_s: float,
    a1: float,
    a2: float,
    spectral_weight: float,
) -> float:
    """Tilted window mass around nq.

    spectral_weight carries r_s(v)/nu_s(r_s) * integral phi <f,u>^s d nu_s; the
    interval enters through the stable prefactor (e^{-s a1} - e^{-s a2})/s.
    """
    return (
        spectral_weight
        * tilted_interval_factor(s, a1, a2)
        * math.exp(-n * rate)
        / (sigma_s * math.sqrt(2.0 * math.pi * n))
    )


def empirical_cdf_on_grid(standardized: np.ndarray, y_grid: np.ndarray) -> np.ndarray:
    """Right-continuous empirical CDF evaluated at fixed grid points."""
    xs = np.sort(standardized)
    return np.searchsorted(xs, y_grid, side="right") / xs.size
