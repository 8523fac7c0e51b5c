import json
import math

import numpy as np
import pytest

from conelab import (
    PositiveMatrix,
    RandomStream,
    build_finite,
    check_conditions,
    ensemble_from_dict,
    ensemble_hash,
    ensemble_to_dict,
    load_ensemble,
    sample_matrix,
    scalar_reference,
)
from conelab.ensemble import sample_indices
from conelab.errors import (
    BadProbabilityVectorError,
    DimensionMismatchError,
    NonPositiveEntryError,
)

M = [[2.0, 1.0], [1.0, 2.0]]


def test_build_examples():
    pm = build_finite(2, [M], [1.0])
    assert pm.n_atoms == 1
    two = build_finite(2, [M, (2.0 * np.array(M))], [0.5, 0.5])
    assert two.n_atoms == 2
    with pytest.raises(NonPositiveEntryError):
        build_finite(2, [[[2.0, 0.0], [1.0, 2.0]]], [1.0])


def test_build_validation_errors():
    with pytest.raises(BadProbabilityVectorError):
        build_finite(2, [M, M], [0.6, 0.5])
    with pytest.raises(BadProbabilityVectorError):
        build_finite(2, [M, M], [1.0, 0.0])
    with pytest.raises(DimensionMismatchError):
        build_finite(2, [M, np.ones((3, 3))], [0.5, 0.5])
    with pytest.raises(BadProbabilityVectorError):
        build_finite(2, [], [])


def test_conditions_point_mass():
    rep = check_conditions(build_finite(2, [M], [1.0]))
    assert rep.c_full == 2.0
    assert rep.c_col == 2.0
    assert rep.epsilon == pytest.approx(0.25)
    assert rep.nonarithmetic_heuristic is False
    assert rep.moment_log3_finite and rep.moment_exponential_finite


def test_conditions_heuristic_true():
    ens = build_finite(2, [M, math.e * np.ones((2, 2))], [0.5, 0.5])
    rep = check_conditions(ens)
    assert rep.nonarithmetic_heuristic is True
    assert rep.witness is not None and rep.witness["rational_distance"] > 1e-9


def test_conditions_scalar_pair_is_arithmetic(sym_reference):
    # atoms M and 2M: log rho ratio log3 : log6 -- not rational with q <= 64,
    # so the witness-based heuristic fires even though the *scalar* part is a
    # lattice; the heuristic tests the Kesten sufficient condition only.
    rep = check_conditions(sym_reference.ensemble())
    assert rep.epsilon == pytest.approx(0.25)


def test_epsilon_in_unit_interval(generic_ensemble):
    rep = check_conditions(generic_ensemble)
    assert 0.0 < rep.epsilon < 1.0
    assert rep.c_full >= rep.c_col >= 1.0


def test_sampling_point_mass():
    ens = build_finite(2, [M], [1.0])
    for _ in range(5):
        assert np.array_equal(sample_matrix(ens, RandomStream(0)).entries, np.array(M))


def test_sampling_frequency():
    ens = build_finite(2, [M, 2.0 * np.array(M)], [0.5, 0.5])
    idx = sample_indices(ens, RandomStream(123), 100000)
    freq = (idx == 0).mean()
    sigma = math.sqrt(0.25 / 100000)
    assert abs(freq - 0.5) <= 3 * sigma


def test_sampling_replay():
    ens = build_finite(2, [M, 2.0 * np.array(M)], [0.3, 0.7])
    a = sample_indices(ens, RandomStream(9), 1000)
    b = sample_indices(ens, RandomStream(9), 1000)
    assert np.array_equal(a, b)


def test_scalar_reference_closed_forms(sym_reference):
    assert sym_reference.lambda_of(1.0) == pytest.approx(math.log(4.5))
    assert sym_reference.lyapunov == pytest.approx(math.log(3.0) + 0.5 * math.log(2.0))
    assert sym_reference.sigma2 == pytest.approx(math.log(2.0) ** 2 / 4.0)
    assert sym_reference.m3 == pytest.approx(0.0, abs=1e-15)
    assert sym_reference.lambda_of(0.0) == pytest.approx(0.0, abs=1e-15)


def test_scalar_reference_degenerate():
    ref = scalar_reference(M, [(1.0, 1.0)])
    for s in (-1.0, 0.3, 2.0):
        assert ref.lambda_of(s) == pytest.approx(s * math.log(3.0))
    assert ref.sigma2 == pytest.approx(0.0, abs=1e-15)


def test_scalar_reference_cumulants_match_finite_differences(asym_reference):
    # third differences amplify rounding by h^-3, so order 3 uses a wider step
    for order, h, tol in ((1, 1e-5, 1e-8), (2, 1e-4, 1e-6), (3, 1e-2, 1e-4)):
        if order == 1:
            fd = (asym_reference.lambda_of(h) - asym_reference.lambda_of(-h)) / (2 * h)
        elif order == 2:
            fd = (
                asym_reference.lambda_of(h) - 2 * asym_reference.lambda_of(0.0)
                + asym_reference.lambda_of(-h)
            ) / h**2
        else:
            fd = (
                asym_reference.lambda_of(2 * h)
                - 2 * asym_reference.lambda_of(h)
                + 2 * asym_reference.lambda_of(-h)
                - asym_reference.lambda_of(-2 * h)
            ) / (2 * h**3)
        assert asym_reference.cumulant(order) == pytest.approx(fd, abs=tol)


def test_scalar_reference_induced_ensemble(sym_reference):
    ens = sym_reference.ensemble()
    assert ens.n_atoms == 2
    assert np.allclose(ens.atom_tensor[1], 2.0 * np.array(M))
    assert ens.scalar_reference is sym_reference


def test_json_round_trip(tmp_path, generic_ensemble):
    doc = ensemble_to_dict(generic_ensemble)
    again = ensemble_from_dict(doc)
    assert np.allclose(again.atom_tensor, generic_ensemble.atom_tensor)
    assert np.allclose(again.probs, generic_ensemble.probs)
    path = tmp_path / "ens.json"
    path.write_text(json.dumps(doc))
    loaded = load_ensemble(path)
    assert ensemble_hash(loaded) == ensemble_hash(generic_ensemble)


def test_json_rejects_nonfinite(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"dim": 2, "atoms": [[1.0, 1.0, 1.0, NaN]], "probs": [1.0]}')
    with pytest.raises(NonPositiveEntryError):
        load_ensemble(path)
    path.write_text('{"dim": 2, "atoms": [[1.0, 1.0, 1.0, Infinity]], "probs": [1.0]}')
    with pytest.raises(NonPositiveEntryError):
        load_ensemble(path)


def test_json_rejects_nonpositive():
    with pytest.raises(NonPositiveEntryError):
        ensemble_from_dict({"dim": 2, "atoms": [[1.0, 1.0, 0.0, 1.0]], "probs": [1.0]})


def test_json_accepts_flat_and_nested():
    flat = ensemble_from_dict({"dim": 2, "atoms": [[2.0, 1.0, 1.0, 2.0]], "probs": [1.0]})
    nested = ensemble_from_dict({"dim": 2, "atoms": [M], "probs": [1.0]})
    assert np.allclose(flat.atom_tensor, nested.atom_tensor)
    with pytest.raises(DimensionMismatchError):
        ensemble_from_dict({"dim": 2, "atoms": [[1.0, 2.0, 3.0]], "probs": [1.0]})


def test_json_scalar_reference_block():
    doc = {
        "dim": 2,
        "scalar_reference": {"base": M, "scalars": [[1.0, 0.5], [2.0, 0.5]]},
    }
    ens = ensemble_from_dict(doc)
    assert ens.n_atoms == 2 and ens.scalar_reference is not None
    doc_full = ensemble_to_dict(ens)
    again = ensemble_from_dict(doc_full)
    assert again.scalar_reference is not None
    bad = dict(doc_full)
    bad["atoms"] = [[9.0, 1.0, 1.0, 9.0], [1.0, 1.0, 1.0, 1.0]]
    with pytest.raises(DimensionMismatchError):
        ensemble_from_dict(bad)


def test_hash_is_stable_and_discriminating(generic_ensemble, point_mass):
    assert ensemble_hash(generic_ensemble) == ensemble_hash(generic_ensemble)
    assert ensemble_hash(generic_ensemble) != ensemble_hash(point_mass)


def test_transposed(generic_ensemble):
    t = generic_ensemble.transposed()
    assert np.allclose(t.atom_tensor[0], generic_ensemble.atom_tensor[0].T)
    assert np.allclose(t.probs, generic_ensemble.probs)
