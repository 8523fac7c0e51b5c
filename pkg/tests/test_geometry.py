import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conelab import (
    PositiveMatrix,
    SimplexPoint,
    barycenter,
    cocycle_log_norm,
    hilbert_distance,
    kesten_ratio,
    log_N,
    matrix_norm,
    project_action,
    simplex_point,
    spectral_radius_cw,
)
from conelab.errors import IterationBudgetExceededError, NonPositiveEntryError
from conelab.geometry import batch_spectral_radius

from conftest import random_simplex

M = PositiveMatrix([[2.0, 1.0], [1.0, 2.0]])
ONES = PositiveMatrix([[1.0, 1.0], [1.0, 1.0]])


def test_matrix_norm_examples():
    assert matrix_norm(M) == 6.0
    assert matrix_norm(ONES) == 4.0
    assert matrix_norm(M.scaled(3.0)) == pytest.approx(18.0)


def test_log_N_examples():
    assert log_N(M) == pytest.approx(math.log(6.0))
    assert log_N(PositiveMatrix([[0.125, 0.125], [0.125, 0.125]])) == pytest.approx(math.log(2.0))
    assert log_N(PositiveMatrix([[0.5, 0.2], [0.2, 0.1]])) == pytest.approx(0.0, abs=1e-15)


def test_positive_matrix_validation():
    with pytest.raises(NonPositiveEntryError):
        PositiveMatrix([[1.0, 0.0], [1.0, 1.0]])
    with pytest.raises(NonPositiveEntryError):
        PositiveMatrix([[1.0, -2.0], [1.0, 1.0]])
    with pytest.raises(NonPositiveEntryError):
        PositiveMatrix([[1.0, math.inf], [1.0, 1.0]])


def test_simplex_point_validation():
    with pytest.raises(NonPositiveEntryError):
        SimplexPoint(np.array([0.7, 0.31]))
    with pytest.raises(NonPositiveEntryError):
        SimplexPoint(np.array([1.1, -0.1]))
    p = simplex_point([3.0, 1.0])
    assert p.coords == pytest.approx([0.75, 0.25])
    assert p.interior(0.2) and not p.interior(0.3)


def test_hilbert_examples():
    v = simplex_point([0.5, 0.5])
    assert hilbert_distance(v, v) == 0.0
    u = simplex_point([0.75, 0.25])
    assert hilbert_distance(u, v) == pytest.approx(0.5)


def test_hilbert_symmetry_random():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        u = SimplexPoint(random_simplex(rng))
        v = SimplexPoint(random_simplex(rng))
        assert hilbert_distance(u, v) == pytest.approx(hilbert_distance(v, u), abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(1e-6, 1.0), min_size=2, max_size=4),
    st.lists(st.floats(1e-6, 1.0), min_size=2, max_size=4),
)
def test_hilbert_metric_axioms(xs, ys):
    d = min(len(xs), len(ys))
    u = simplex_point(xs[:d])
    v = simplex_point(ys[:d])
    dist = hilbert_distance(u, v)
    assert 0.0 <= dist <= 1.0
    assert dist == pytest.approx(hilbert_distance(v, u), abs=1e-14)
    if np.allclose(u.coords, v.coords, atol=1e-15):
        assert dist <= 1e-12
    elif dist == 0.0:
        assert np.allclose(u.coords, v.coords)


def test_l1_dominated_by_metric():
    # ||u - v||_1 <= 2 d(u, v); factor 2 is attained at opposite vertices
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(10000):
        u, v = random_simplex(rng), random_simplex(rng)
        l1 = np.abs(u - v).sum()
        dist = hilbert_distance(SimplexPoint(u), SimplexPoint(v))
        if dist > 0:
            worst = max(worst, l1 / dist)
    assert worst <= 2.0 + 1e-12
    e1, e2 = simplex_point([1, 1e-15]), simplex_point([1e-15, 1])
    assert np.abs(e1.coords - e2.coords).sum() / hilbert_distance(e1, e2) == pytest.approx(
        2.0, rel=1e-6
    )


def test_project_action_examples():
    assert project_action(ONES, simplex_point([0.9, 0.1])).coords == pytest.approx([0.5, 0.5])
    assert project_action(M, simplex_point([1.0, 1e-300])).coords == pytest.approx([2 / 3, 1 / 3])
    v = simplex_point([1.0, 1e-300])
    for _ in range(200):
        v = project_action(M, v)
    assert v.coords == pytest.approx([0.5, 0.5], abs=1e-12)


def test_contraction(generic_ensemble):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(10000):
        u = SimplexPoint(random_simplex(rng))
        v = SimplexPoint(random_simplex(rng))
        d0 = hilbert_distance(u, v)
        if d0 < 1e-14:
            continue
        g = generic_ensemble.atoms[rng.integers(2)]
        d1 = hilbert_distance(project_action(g, u), project_action(g, v))
        assert d1 <= d0 + 1e-14
        worst = max(worst, d1 / d0)
    assert worst < 1.0


def test_log_norm_continuity(generic_ensemble):
    rng = np.random.default_rng(5)
    for _ in range(2000):
        v1 = SimplexPoint(random_simplex(rng))
        v2 = SimplexPoint(random_simplex(rng))
        d = hilbert_distance(v1, v2)
        if d >= 1.0:
            continue
        for g in generic_ensemble.atoms:
            gap = abs(cocycle_log_norm(g, v1) - cocycle_log_norm(g, v2))
            assert gap <= 2.0 * math.log(1.0 / (1.0 - d)) + 1e-12


def test_cocycle_examples():
    assert cocycle_log_norm(M, simplex_point([0.5, 0.5])) == pytest.approx(math.log(3.0))
    assert cocycle_log_norm(ONES, simplex_point([1.0, 1e-300])) == pytest.approx(math.log(2.0))


def test_vector_norm_below_matrix_norm(generic_ensemble):
    rng = np.random.default_rng(13)
    for _ in range(1000):
        v = SimplexPoint(random_simplex(rng))
        g = generic_ensemble.atoms[rng.integers(2)]
        assert cocycle_log_norm(g, v) <= math.log(matrix_norm(g)) + 1e-14


def test_norm_comparison_lower_bound(generic_ensemble):
    # ||gv|| >= ||g|| / (c^2 d) under full comparability with constant c
    c = max(kesten_ratio(a) for a in generic_ensemble.atoms)
    bound = 1.0 / (c * c * generic_ensemble.dim)
    rng = np.random.default_rng(17)
    lo = math.inf
    for _ in range(10000):
        v = SimplexPoint(random_simplex(rng))
        g = generic_ensemble.atoms[rng.integers(2)]
        lo = min(lo, math.exp(cocycle_log_norm(g, v)) / matrix_norm(g))
    assert lo >= bound


def test_product_comparability_stability(generic_ensemble):
    # row and column ratios of a product are bounded by the atom constant c,
    # so the full ratio of any product is bounded by c^2 (c itself can be
    # exceeded: [[2,1],[1,1]] squared has ratio 2.5 > 2)
    g = PositiveMatrix([[2.0, 1.0], [1.0, 1.0]])
    assert kesten_ratio(g @ g) > kesten_ratio(g)
    c = max(kesten_ratio(a) for a in generic_ensemble.atoms)
    rng = np.random.default_rng(19)
    for _ in range(200):
        length = rng.integers(1, 11)
        prod = generic_ensemble.atoms[rng.integers(2)]
        for _ in range(length - 1):
            prod = generic_ensemble.atoms[rng.integers(2)] @ prod
        assert kesten_ratio(prod) <= c * c + 1e-9


def test_spectral_radius_examples():
    assert spectral_radius_cw(M) == pytest.approx(3.0, rel=1e-10)
    assert spectral_radius_cw(ONES) == pytest.approx(2.0, rel=1e-10)
    assert spectral_radius_cw(M.scaled(5.0)) == pytest.approx(15.0, rel=1e-10)


def test_spectral_radius_certificate():
    g = PositiveMatrix([[3.0, 0.4], [1.1, 2.2]])
    rho = spectral_radius_cw(g, tol=1e-12)
    eig = max(abs(np.linalg.eigvals(g.entries)))
    assert rho == pytest.approx(eig, rel=1e-11)


def test_spectral_radius_budget():
    g = PositiveMatrix([[1.0, 2e-6], [1e-6, 1.0]])
    with pytest.raises(IterationBudgetExceededError):
        spectral_radius_cw(g, tol=1e-14, max_iter=3)


def test_kesten_ratio_examples():
    assert kesten_ratio(M) == 2.0
    assert kesten_ratio(M, columnwise=True) == 2.0
    skew = PositiveMatrix([[10.0, 1.0], [10.0, 1.0]])
    assert kesten_ratio(skew, columnwise=True) == 1.0
    assert kesten_ratio(skew) == 10.0


def test_entry_spectral_norm_sandwich(generic_ensemble):
    rng = np.random.default_rng(23)
    for _ in range(200):
        prod = generic_ensemble.atoms[rng.integers(2)]
        for _ in range(rng.integers(1, 25)):
            prod = generic_ensemble.atoms[rng.integers(2)] @ prod
        rho = spectral_radius_cw(prod)
        assert prod.entries[0, 0] <= rho * (1 + 1e-12)
        assert rho <= matrix_norm(prod) * (1 + 1e-12)


def test_batch_spectral_radius_matches_scalar():
    rng = np.random.default_rng(29)
    mats = rng.uniform(0.1, 3.0, size=(64, 3, 3))
    batch = batch_spectral_radius(mats, tol=1e-12)
    for k in range(64):
        assert batch[k] == pytest.approx(
            spectral_radius_cw(PositiveMatrix(mats[k]), tol=1e-12), rel=1e-10
        )


def test_barycenter():
    assert barycenter(4).coords == pytest.approx([0.25] * 4)
