import math

import numpy as np
import pytest

from conelab import (
    CumulantTable,
    build_grid,
    cramer_series,
    cumulants,
    lambda_curve,
    legendre,
    lyapunov_exponent,
)
from conelab.errors import DerivativeUnstableError, QOutOfRangeError
from conelab.ratefn import export_cumulants_csv, export_legendre_csv

S_DENSE = np.linspace(-2.0, 2.0, 161)


@pytest.fixture(scope="module")
def sym_table(sym_reference, grid256):
    return lambda_curve(sym_reference.ensemble(), grid256, S_DENSE)


@pytest.fixture(scope="module")
def asym_table(asym_reference, grid256):
    return lambda_curve(asym_reference.ensemble(), grid256, S_DENSE)


def exact_legendre(ref, q, s_lo=-3.0, s_hi=3.0):
    """Oracle Legendre point from the closed-form reference via bisection."""
    for _ in range(200):
        mid = 0.5 * (s_lo + s_hi)
        if ref.cumulant(1, mid) < q:
            s_lo = mid
        else:
            s_hi = mid
    s = 0.5 * (s_lo + s_hi)
    return s, s * q - ref.lambda_of(s)


def test_lambda_matches_closed_form(sym_table, sym_reference):
    for s in (-1.0, -0.5, 0.5, 1.0):
        assert float(sym_table.Lam(s)) == pytest.approx(sym_reference.lambda_of(s), abs=1e-6)


def test_lambda_zero_anchor(sym_table):
    assert float(sym_table.Lam(0.0)) == pytest.approx(0.0, abs=1e-12)


def test_point_mass_curve(point_mass, grid256):
    table = lambda_curve(point_mass, grid256, np.linspace(-1.5, 1.5, 31))
    for s in (-1.0, 0.25, 1.2):
        assert float(table.Lam(s)) == pytest.approx(s * math.log(3.0), abs=1e-9)
    lam, sig2, m3 = cumulants(table)
    assert lam == pytest.approx(math.log(3.0), abs=1e-9)
    assert sig2 == pytest.approx(0.0, abs=1e-8)
    assert m3 == pytest.approx(0.0, abs=1e-7)


def test_cumulants_scalar_reference(sym_table, sym_reference):
    lam, sig2, m3 = cumulants(sym_table)
    assert lam == pytest.approx(sym_reference.lyapunov, abs=1e-6)
    assert sig2 == pytest.approx(sym_reference.sigma2, abs=1e-5)
    assert m3 == pytest.approx(0.0, abs=1e-3)


def test_derivative_cross_check_gaps(sym_table):
    assert sym_table.fd_check["max_gap_d1"] <= 1e-5
    assert sym_table.fd_check["max_gap_d3"] <= 1e-3


def test_legendre_at_center(sym_table):
    q0 = sym_table.lambda1
    s, rate = legendre(sym_table, q0)
    assert abs(s) < 1e-9
    assert abs(rate) <= 1e-10


def test_legendre_closed_form_point(sym_table):
    # tilt s* = 1: q = log 3 + (2/3) log 2, rate = q - log 4.5
    q = math.log(3.0) + (2.0 / 3.0) * math.log(2.0)
    s, rate = legendre(sym_table, q)
    assert s == pytest.approx(1.0, abs=1e-5)
    assert rate == pytest.approx(q - math.log(4.5), abs=1e-7)


def test_rate_nonnegative_and_duality(sym_table):
    for q in np.linspace(sym_table.dLam(-1.6), sym_table.dLam(1.6), 21):
        s, rate = legendre(sym_table, float(q))
        assert rate >= -1e-12
        assert sym_table.dLam(s, 1) == pytest.approx(q, abs=1e-8)
        assert rate == pytest.approx(s * q - float(sym_table.Lam(s)), abs=1e-12)


def test_rate_positive_off_center(sym_table):
    for s0 in (-1.0, -0.3, 0.4, 1.2):
        q = sym_table.dLam(s0, 1)
        _, rate = legendre(sym_table, q)
        assert rate > 0.0


def test_q_out_of_range(sym_table):
    with pytest.raises(QOutOfRangeError):
        legendre(sym_table, sym_table.dLam(sym_table.s_max, 1) + 1.0)


def test_cramer_series_symmetric(sym_table):
    # gamma_3 = 0 for the symmetric scalar law
    assert cramer_series(sym_table, 0.0, 0.0) == pytest.approx(0.0, abs=2e-3)


def test_cramer_series_asymmetric(asym_table, asym_reference):
    g2, g3 = asym_reference.cumulant(2), asym_reference.cumulant(3)
    assert cramer_series(asym_table, 0.0, 0.0) == pytest.approx(g3 / (6 * g2**1.5), abs=2e-3)


def test_cramer_identity_closed_form(asym_reference):
    # Lambda*(q+l) - [Lambda*(q) + s l + l^2/(2 sigma_s^2)] = -(l/sigma_s)^3 zeta_s(l/sigma_s) + O(l^6)
    s0, l = 0.4, 1e-2
    q = asym_reference.cumulant(1, s0)
    sig2 = asym_reference.cumulant(2, s0)
    sig = math.sqrt(sig2)
    _, rate_q = exact_legendre(asym_reference, q)
    _, rate_ql = exact_legendre(asym_reference, q + l)
    gammas = {k: asym_reference.cumulant(k, s0) for k in (2, 3, 4, 5)}
    t = l / sig
    zeta = (
        gammas[3] / (6 * gammas[2] ** 1.5)
        + (gammas[4] * gammas[2] - 3 * gammas[3] ** 2) / (24 * gammas[2] ** 3) * t
        + (gammas[5] * gammas[2] ** 2 - 10 * gammas[4] * gammas[3] * gammas[2] + 15 * gammas[3] ** 3)
        / (120 * gammas[2] ** 4.5)
        * t**2
    )
    lhs = rate_ql - (rate_q + s0 * l + l * l / (2 * sig2))
    rhs = -((l / sig) ** 3) * zeta
    assert lhs == pytest.approx(rhs, abs=1e-6)


def test_cramer_identity_numerical_table(asym_table):
    s0, l = 0.4, 1e-2
    q = asym_table.dLam(s0, 1)
    sig = asym_table.sigma_s(s0)
    _, rate_q = legendre(asym_table, q)
    _, rate_ql = legendre(asym_table, q + l)
    lhs = rate_ql - (rate_q + s0 * l + l * l / (2 * sig * sig))
    rhs = -((l / sig) ** 3) * cramer_series(asym_table, s0, l / sig)
    assert lhs == pytest.approx(rhs, abs=1e-6)


def test_sigma_s_guard():
    flat = CumulantTable(np.linspace(-1, 1, 21), np.zeros(21))
    with pytest.raises(DerivativeUnstableError):
        flat.sigma_s(0.0)


def test_requires_zero_sample(generic_ensemble, grid256):
    with pytest.raises(ValueError):
        lambda_curve(generic_ensemble, grid256, np.linspace(0.1, 1.0, 5))


def test_lyapunov_exponent_matches_table(sym_reference, grid256):
    lam = lyapunov_exponent(sym_reference.ensemble(), grid256)
    assert lam == pytest.approx(sym_reference.lyapunov, abs=1e-8)


def test_csv_exports(tmp_path, sym_table):
    cpath = tmp_path / "curve.csv"
    export_cumulants_csv(sym_table, cpath)
    lines = cpath.read_text().splitlines()
    assert lines[0] == "s,Lambda,dLambda,d2Lambda,d3Lambda"
    assert len(lines) == len(sym_table.s_samples) + 1
    lpath = tmp_path / "legendre.csv"
    qs = [sym_table.dLam(s, 1) for s in (-1.0, 0.0, 1.0)]
    export_legendre_csv(sym_table, qs, lpath)
    lines = lpath.read_text().splitlines()
    assert lines[0] == "q,s_star,rate"
    assert len(lines) == 4
