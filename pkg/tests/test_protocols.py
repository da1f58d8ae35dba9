import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qnetsim import channels as ch
from qnetsim.entangled import BELL_ORDER, BellLabel, bell_density
from qnetsim.errors import ConfigInvalid
from qnetsim.protocols import (
    Bb84Config,
    E91Config,
    TeleportSession,
    bb84,
    bitflip_pair,
    bob_marginal_before_message,
    chsh_game,
    correction_for,
    detection_probability,
    e91,
    entanglement_swap,
    key_rule,
    kept_state,
    purify,
    purify_branches,
    recurrence,
    teleport,
    win_probability,
)
from qnetsim.protocols.purify import fidelity_to_phi_plus, iterate
from qnetsim.qstate import PureState, fidelity
from qnetsim.rng import make_rng

from conftest import random_ket


# CHSH game -------------------------------------------------------------------------


def test_game_exact_win_rates():
    assert win_probability("always_zero") == 0.75
    assert win_probability("random") == 0.5
    assert win_probability("echo_inputs") == 0.25
    assert win_probability("quantum") == pytest.approx((2 + math.sqrt(2)) / 4, abs=1e-12)


def test_game_sampled_matches_exact():
    rng = make_rng(4)
    assert abs(chsh_game("always_zero", 20_000, rng) - 0.75) < 0.02
    assert abs(chsh_game("quantum", 50_000, rng) - 0.853553) < 0.01


def test_game_rejects_unknown_strategy():
    with pytest.raises(ValueError):
        chsh_game("telepathy")


# Teleportation -------------------------------------------------------------------------


def test_correction_table():
    assert correction_for(BellLabel.PhiPlus) == "I"
    assert correction_for(BellLabel.PhiMinus) == "Z"
    assert correction_for(BellLabel.PsiPlus) == "X"
    assert correction_for(BellLabel.PsiMinus) == "ZX"


@pytest.mark.parametrize("resource", list(BELL_ORDER))
@pytest.mark.parametrize("outcome", list(BELL_ORDER))
def test_teleport_every_branch_every_resource(resource, outcome):
    psi = PureState.from_bloch(1.1, 0.4)
    res = teleport(psi, bell_density(resource), make_rng(0), outcome=outcome)
    assert res.probability == pytest.approx(0.25, abs=1e-12)
    assert fidelity(res.bob_state, psi) == pytest.approx(1.0, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_teleport_random_inputs(seed):
    rng = np.random.default_rng(seed)
    psi = PureState(random_ket(rng, 1))
    res = teleport(psi, bell_density("PhiPlus"), rng)
    assert fidelity(res.bob_state, psi) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(bob_marginal_before_message(psi, bell_density("PhiPlus")).mat, np.eye(2) / 2, atol=1e-12)


def test_teleport_session_order_enforced():
    s = TeleportSession(PureState.from_label("+"), bell_density("PhiPlus"), message_latency_s=1e-3)
    with pytest.raises(RuntimeError):
        s.deliver()
    s.measure(make_rng(1))
    with pytest.raises(RuntimeError):
        s.correct()
    assert s.deliver() == pytest.approx(1e-3)
    assert s.correct().correction in ("I", "Z", "X", "ZX")


# Swapping -------------------------------------------------------------------------------


@pytest.mark.parametrize("outcome", list(BELL_ORDER))
def test_swap_ideal_pairs_outcome_matched(outcome):
    phi = bell_density("PhiPlus")
    res = entanglement_swap(phi, phi, make_rng(0), outcome=outcome)
    assert res.probability == pytest.approx(0.25, abs=1e-12)
    # uncorrected A-C pair is the Bell state named by the outcome
    assert fidelity(res.state_ac, outcome.vector) == pytest.approx(1.0, abs=1e-12)
    assert fidelity_to_phi_plus(res.corrected_ac) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("F", [0.6, 0.75, 0.95])
def test_swap_with_one_noisy_link_keeps_its_fidelity(F):
    for outcome in BELL_ORDER:
        res = entanglement_swap(bitflip_pair(F), bell_density("PhiPlus"), make_rng(0), outcome=outcome)
        assert fidelity_to_phi_plus(res.corrected_ac) == pytest.approx(F, abs=1e-12)


def test_swap_two_noisy_links_compose():
    F1, F2 = 0.9, 0.8
    res = entanglement_swap(bitflip_pair(F1), bitflip_pair(F2), make_rng(0), outcome="PhiPlus")
    assert fidelity_to_phi_plus(res.corrected_ac) == pytest.approx(F1 * F2 + (1 - F1) * (1 - F2), abs=1e-12)


# Purification ----------------------------------------------------------------------------


@pytest.mark.parametrize("F", [0.6, 0.7, 0.8, 0.9])
def test_purification_density_matches_recurrence(F):
    f_new, keep = recurrence(F)
    assert keep == pytest.approx(F**2 + (1 - F) ** 2, abs=1e-12)
    assert f_new == pytest.approx(F**2 / (F**2 + (1 - F) ** 2), abs=1e-12)
    p, post = kept_state(bitflip_pair(F), bitflip_pair(F))
    assert p == pytest.approx(keep, abs=1e-12)
    assert fidelity_to_phi_plus(post) == pytest.approx(f_new, abs=1e-12)


def test_purification_frozen_example():
    assert recurrence(0.8) == pytest.approx((0.9411764705882353, 0.68), abs=1e-12)


def test_purification_branches_sum_to_one():
    br = purify_branches(bitflip_pair(0.7), bitflip_pair(0.7))
    assert sum(p for p, _ in br.values()) == pytest.approx(1.0, abs=1e-12)


def test_purify_sampling_and_forced():
    res = purify(bitflip_pair(0.8), bitflip_pair(0.8), make_rng(0), outcome=(0, 1))
    assert not res.kept and res.post is None
    rng = make_rng(2)
    kept = sum(purify(bitflip_pair(0.8), bitflip_pair(0.8), rng).kept for _ in range(3000))
    assert abs(kept / 3000 - 0.68) < 3 * math.sqrt(0.68 * 0.32 / 3000)


def test_iterate_is_monotone_above_half():
    fs = iterate(0.6, 5)
    assert all(b > a for a, b in zip(fs, fs[1:]))
    assert recurrence(0.5)[0] == pytest.approx(0.5)


# BB84 ------------------------------------------------------------------------------------


def test_bb84_forced_fixture():
    cfg = Bb84Config(5, alice_bits="01101", alice_bases="11001", bob_bases="11100", n_test=0)
    rep = bb84(cfg)
    assert rep.kept_indices.tolist() == [0, 1, 3]
    assert rep.key_string() == "010"
    assert rep.key_mismatch_count == 0


def test_bb84_no_eve_is_clean():
    rep = bb84(Bb84Config(4000, rng_seed=9))
    assert rep.mismatch_count == 0 and rep.key_mismatch_count == 0
    assert not rep.detection_flag


def test_bb84_intercept_resend_quarter():
    rep = bb84(Bb84Config(40_000, eve_mode="intercept_resend", test_fraction=1.0, rng_seed=1))
    assert abs(rep.test_mismatch_rate - 0.25) < 0.015
    assert rep.detection_flag


def test_bb84_basis_informed_eve_is_invisible():
    rep = bb84(Bb84Config(5000, eve_mode="basis_informed", eve_fraction=1.0, test_fraction=1.0, rng_seed=2))
    assert rep.mismatch_count == 0


def test_bb84_channel_noise_and_abort():
    noisy = dict(test_fraction=1.0, channel=ch.bitflip(0.1), rng_seed=5)
    rep = bb84(Bb84Config(20_000, abort_mismatch_fraction=0.02, **noisy))
    # Z-basis rounds flip with p, X-basis rounds are immune to a bit flip
    assert abs(rep.test_mismatch_rate - 0.05) < 0.01
    assert rep.aborted
    assert not bb84(Bb84Config(20_000, abort_mismatch_fraction=0.2, **noisy)).aborted


def test_bb84_validation():
    with pytest.raises(ConfigInvalid):
        Bb84Config(0)
    with pytest.raises(ConfigInvalid):
        Bb84Config(10, eve_mode="loud")
    with pytest.raises(ConfigInvalid):
        bb84(Bb84Config(4, n_test=10))


def test_detection_probability_closed_form():
    assert detection_probability(25) == pytest.approx(1 - 0.75**25, abs=1e-15)
    assert detection_probability(25) == pytest.approx(0.999247, abs=1e-6)
    assert detection_probability(0) == 0.0


# E91 -------------------------------------------------------------------------------------


def test_e91_rule_for_psi_plus():
    assert key_rule("PsiPlus") == {(0, 0): "flip", (2, 2): "drop"}
    assert key_rule("PhiPlus") == {(0, 0): "keep", (2, 2): "keep"}


def test_e91_partition_and_key():
    res = e91(E91Config(90_000, rng_seed=3))
    total = sum(res.round_classes.values())
    assert abs(res.round_classes["key"] / total - 2 / 9) < 0.01
    assert abs(res.round_classes["chsh"] / total - 4 / 9) < 0.01
    assert res.key_report.key_mismatch_count == 0
    assert abs(abs(res.chsh) - 2 * math.sqrt(2)) < 0.06
    assert not res.key_report.detection_flag


def test_e91_depolarized_source_is_flagged():
    res = e91(E91Config(20_000, rng_seed=3, channel=ch.depolarizing(1.0)))
    assert res.key_report.detection_flag
