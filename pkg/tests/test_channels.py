import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qnetsim import channels as ch
from qnetsim import linalg as la
from qnetsim.errors import InvalidProbability, NegativeInput, ZeroProbability
from qnetsim.qstate import DensityMatrix, PureState, fidelity, is_valid_density

from conftest import random_density

seeds = st.integers(0, 2**32 - 1)
probs = st.floats(0.0, 1.0)


def all_channels(p, t, T):
    return [ch.bitflip(p), ch.phaseflip(p), ch.depolarizing(p), ch.relaxation_t1(t, T), ch.dephasing_t2(t, T)]


def test_bitflip_and_phaseflip_action():
    rho = ch.apply_channel(PureState.from_label("0"), ch.bitflip(0.3))
    assert np.allclose(rho.mat, np.diag([0.7, 0.3]))
    rho = ch.apply_channel(PureState.from_label("+"), ch.phaseflip(0.5))
    assert np.allclose(rho.mat, np.eye(2) / 2)


def test_depolarizing_mixes_toward_identity():
    rho0 = PureState.from_label("0").to_density().mat
    rho = ch.apply_channel(rho0, ch.depolarizing(0.4)).mat
    assert np.allclose(rho, 0.6 * rho0 + 0.4 * np.eye(2) / 2)
    assert np.allclose(ch.apply_channel(rho0, ch.depolarizing(1.0)).mat, np.eye(2) / 2)


def test_t1_excited_population_decays_to_one_over_e():
    rho = ch.apply_channel(PureState.from_label("1"), ch.relaxation_t1(2.0, 2.0))
    assert rho.mat[1, 1].real == pytest.approx(math.exp(-1), abs=1e-12)


def test_t2_scales_coherence():
    rho = ch.apply_channel(PureState.from_label("+"), ch.dephasing_t2(0.5, 1.0))
    assert abs(rho.mat[0, 1]) == pytest.approx(0.5 * math.exp(-0.5), abs=1e-12)
    # fidelity with |+> is (1 + e^{-t/T2}) / 2
    assert fidelity(rho, la.KET_PLUS) == pytest.approx((1 + math.exp(-0.5)) / 2, abs=1e-12)


def test_infinite_memory_is_identity():
    rho = PureState.from_label("+").to_density()
    out = ch.memory_decay(rho, 5.0, math.inf, math.inf, (0,))
    assert np.allclose(out.mat, rho.mat)


def test_channel_targets_one_qubit_of_many():
    rho = PureState.from_label("00").to_density()
    out = ch.apply_channel(rho, ch.bitflip(1.0), target=1)
    assert np.allclose(out.mat, PureState.from_label("01").to_density().mat)


def test_channel_parameter_checks():
    with pytest.raises(InvalidProbability):
        ch.bitflip(1.2)
    with pytest.raises(NegativeInput):
        ch.relaxation_t1(-1.0, 1.0)
    with pytest.raises(NegativeInput):
        ch.dephasing_t2(1.0, 0.0)
    with pytest.raises(InvalidProbability):
        ch.NoiseChannel("amplitude")


def test_fiber_survival_numbers():
    assert ch.survival_probability(20, 1) == pytest.approx(0.01, rel=1e-12)
    assert ch.survival_probability(0.18, 20) == pytest.approx(0.436516, abs=1e-6)
    assert ch.log10_survival(0.1, 1000) == -10.0
    with pytest.raises(NegativeInput):
        ch.survival_probability(-0.1, 1)


def test_expected_wait():
    assert ch.expected_wait(1e-10, 1.0) == pytest.approx(1e10)
    with pytest.raises(ZeroProbability):
        ch.expected_wait(0.0, 1.0)
    with pytest.raises(InvalidProbability):
        ch.expected_wait(1.5, 1.0)


def test_erasure_sampling(rng):
    hits = sum(ch.erasure(0.3, rng).survived for _ in range(5000))
    assert abs(hits / 5000 - 0.3) < 0.03
    assert ch.transmit_photon(0.0, 10.0, rng).survived


@given(seeds, probs, st.floats(0, 10), st.floats(0.01, 10))
def test_kraus_completeness(seed, p, t, T):
    for c in all_channels(p, t, T):
        total = sum(k.conj().T @ k for k in c.kraus())
        assert np.allclose(total, la.I2, atol=1e-12)


@given(seeds, probs, st.floats(0, 10), st.floats(0.01, 10))
def test_channel_outputs_are_valid_states(seed, p, t, T):
    rng = np.random.default_rng(seed)
    rho = DensityMatrix(random_density(rng, 2))
    for c in all_channels(p, t, T):
        out = ch.apply_channel(rho, c, int(rng.integers(2)))
        assert is_valid_density(out.mat, atol=1e-12)
