import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qnetsim import linalg as la
from qnetsim.errors import ConfigInvalid, DimensionMismatch, InvalidProbability, NonUnitary, NonUnitVector, ZeroProbabilityBranch
from qnetsim.qstate import (
    DensityMatrix,
    PureState,
    apply_gate,
    apply_gates,
    basis,
    bloch_coordinates,
    expectation,
    fidelity,
    is_valid_density,
    mach_zehnder,
    measure,
    outcome_probabilities,
    partial_trace,
    project,
    purity,
    rotation_gate,
    variance,
)

from conftest import random_density, random_ket, random_unitary

seeds = st.integers(0, 2**32 - 1)


def test_pure_state_requires_unit_norm():
    with pytest.raises(NonUnitVector):
        PureState([1, 1])
    with pytest.raises(DimensionMismatch):
        PureState([1, 0, 0])
    assert np.allclose(PureState.normalized([1, 1]).vec, la.KET_PLUS)


def test_from_label_products():
    assert np.allclose(PureState.from_label("0+").vec, la.tensor(la.KET0, la.KET_PLUS))
    assert np.allclose(PureState.from_label("+i").vec, la.KET_PLUS_I)
    with pytest.raises(ConfigInvalid):
        PureState.from_label("2")


def test_density_validation():
    with pytest.raises(InvalidProbability):
        DensityMatrix(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidProbability):
        DensityMatrix(np.eye(2))
    with pytest.raises(DimensionMismatch):
        DensityMatrix(np.array([[0.5, 1], [0, 0.5]]))
    assert is_valid_density(np.eye(4) / 4)


def test_mixture_and_maximally_mixed():
    rho = DensityMatrix.mixture([0.5, 0.5], [PureState.from_label("0"), PureState.from_label("1")])
    assert np.allclose(rho.mat, DensityMatrix.maximally_mixed(1).mat)
    with pytest.raises(InvalidProbability):
        DensityMatrix.mixture([0.7, 0.7], [la.KET0, la.KET1])


def test_apply_gate_rejects_non_unitary():
    with pytest.raises(NonUnitary):
        apply_gate(PureState.from_label("0"), np.array([[1, 1], [0, 1]]), 0)


def test_hadamard_cnot_makes_bell_state():
    st_ = apply_gates(PureState.from_label("00"), [(la.H, 0), (la.CNOT, (0, 1))])
    assert np.allclose(st_.vec, np.array([1, 0, 0, 1]) / math.sqrt(2))


def test_measure_probabilities_born_rule():
    psi = PureState.from_bloch(math.pi / 3, 0.0)
    probs = outcome_probabilities(psi, basis("Z"))
    assert probs[+1] == pytest.approx(math.cos(math.pi / 6) ** 2, abs=1e-12)
    assert expectation(psi, basis("Z")) == pytest.approx(0.5, abs=1e-12)
    assert variance(psi, basis("Z")) == pytest.approx(0.75, abs=1e-12)


def test_project_zero_branch_raises():
    with pytest.raises(ZeroProbabilityBranch):
        project(PureState.from_label("0"), basis("Z"), -1)


def test_sampled_measurement_frequencies(rng):
    psi = PureState.from_label("+")
    hits = sum(measure(psi, basis("Z"), rng).outcome == 1 for _ in range(4000))
    assert abs(hits / 4000 - 0.5) < 0.03


def test_measure_collapses():
    rng = np.random.default_rng(1)
    bell = apply_gates(PureState.from_label("00"), [(la.H, 0), (la.CNOT, (0, 1))])
    rec = measure(bell, basis("Z", 0), rng)
    again = outcome_probabilities(rec.post_state, basis("Z", 1))
    assert again[rec.outcome] == pytest.approx(1.0)


def test_bloch_and_purity():
    assert bloch_coordinates(PureState.from_label("+")) == pytest.approx((1, 0, 0), abs=1e-12)
    assert bloch_coordinates(PureState.from_label("-i")) == pytest.approx((0, -1, 0), abs=1e-12)
    assert purity(DensityMatrix.maximally_mixed(1)) == pytest.approx(0.5)


def test_partial_trace_of_bell_is_mixed():
    bell = apply_gates(PureState.from_label("00"), [(la.H, 0), (la.CNOT, (0, 1))])
    assert np.allclose(partial_trace(bell, [0]).mat, np.eye(2) / 2)


def test_partial_trace_keeps_requested_order():
    psi = PureState.from_label("01+")
    red = partial_trace(psi, [2, 0])
    assert np.allclose(red.mat, PureState.from_label("+0").to_density().mat)


def test_rotation_gate_about_y():
    g = rotation_gate((0, 1, 0), math.pi)
    assert la.equal_up_to_phase(g @ la.KET0, la.KET1)
    with pytest.raises(NonUnitVector):
        rotation_gate((1, 1, 0), 0.3)


def test_mach_zehnder_interference_and_blocking():
    open_ = mach_zehnder(PureState.from_label("0"))
    assert open_["D0"] == pytest.approx(0.0, abs=1e-12)
    assert open_["D1"] == pytest.approx(1.0, abs=1e-12)
    blocked = mach_zehnder(PureState.from_label("0"), block_lower=True)
    assert blocked == pytest.approx({"D0": 0.25, "D1": 0.25, "absorbed": 0.5})


def test_fidelity_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        fidelity(PureState.from_label("0"), la.ket("00"))


@given(seeds, st.integers(1, 3))
def test_gate_application_pure_matches_density(seed, n):
    rng = np.random.default_rng(seed)
    psi = PureState(random_ket(rng, n))
    u = random_unitary(rng, 2)
    t = int(rng.integers(n))
    pure = apply_gate(psi, u, t).to_density().mat
    mixed = apply_gate(psi.to_density(), u, t).mat
    assert np.allclose(pure, mixed, atol=1e-12)


@given(seeds)
def test_partial_trace_preserves_validity(seed):
    rng = np.random.default_rng(seed)
    rho = DensityMatrix(random_density(rng, 3))
    red = partial_trace(rho, [1])
    assert is_valid_density(red.mat, atol=1e-12)
    # tracing out everything in two steps agrees with one step
    two = partial_trace(partial_trace(rho, [0, 1]), [1])
    assert np.allclose(two.mat, red.mat, atol=1e-12)


@given(seeds)
def test_fidelity_of_pure_with_itself(seed):
    rng = np.random.default_rng(seed)
    psi = PureState(random_ket(rng, 2))
    assert fidelity(psi, psi) == pytest.approx(1.0, abs=1e-12)
    assert purity(psi) == pytest.approx(1.0, abs=1e-12)
