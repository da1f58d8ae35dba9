import math

import numpy as np
import pytest

from qnetsim.entangled import BELL_ORDER, BellLabel, bell_density
from qnetsim.errors import ConfigInvalid, UnreachableThreshold
from qnetsim.linklayer import (
    LinkSpec,
    attempt_period,
    bsa_success_probability,
    bsm_circuit,
    classify_clicks,
    expected_raw_fidelity,
    generate_link_entanglement,
    herald_probability,
    link_cost,
    link_timing,
    pair_multiplier,
    photonic_bsa,
    purification_plan,
    run_link,
    simulate_heralds,
)
from qnetsim.protocols import recurrence
from qnetsim.qstate import fidelity
from qnetsim.rng import make_rng

TABLE = {
    BellLabel.PsiMinus: {"D1D4", "D2D3"},
    BellLabel.PsiPlus: {"D1D2", "D3D4"},
}


@pytest.mark.parametrize("label", list(BELL_ORDER))
def test_bsm_circuit_is_deterministic_on_bell_inputs(label):
    res = bsm_circuit(bell_density(label), make_rng(0))
    assert res.label is label
    assert res.probability == pytest.approx(1.0)


def test_classify_clicks():
    assert classify_clicks({"D1", "D4"}).projected is BellLabel.PsiMinus
    assert classify_clicks({"D3", "D4"}).projected is BellLabel.PsiPlus
    assert classify_clicks({"D1", "D3"}).pattern == "other"
    assert classify_clicks(set()).pattern == "no_click"
    assert not classify_clicks({"D2"}).kept
    with pytest.raises(ValueError):
        classify_clicks({"D9"})


def test_bsa_labeled_patterns_match_table():
    rng = make_rng(1)
    for label, allowed in TABLE.items():
        seen = {photonic_bsa(label, 1.0, rng).pattern for _ in range(400)}
        assert seen == allowed
        assert all(photonic_bsa(label, 1.0, rng).projected is label for _ in range(100))
    for label in (BellLabel.PhiPlus, BellLabel.PhiMinus):
        assert all(photonic_bsa(label, 1.0, rng).pattern == "single_click" for _ in range(200))


def test_bsa_lost_photon_never_kept():
    rng = make_rng(2)
    for _ in range(500):
        assert not photonic_bsa(None, 1.0, rng, left_present=False).kept
        assert not photonic_bsa(None, 1.0, rng, right_present=False, dark_count_prob=0.5).kept
    assert photonic_bsa(None, 1.0, rng, False, False).pattern == "no_click"


def test_bsa_efficiency_scales_keep_rate():
    rng = make_rng(3)
    n = 20_000
    kept = sum(photonic_bsa(None, 0.8, rng).kept for _ in range(n)) / n
    assert abs(kept - bsa_success_probability(0.8)) < 0.015
    assert bsa_success_probability(0.8) == pytest.approx(0.32)


def test_link_spec_validation():
    with pytest.raises(ConfigInvalid):
        LinkSpec("XYZ")
    with pytest.raises(ConfigInvalid):
        LinkSpec(bsa_position_km=5.0, length_km=1.0)
    with pytest.raises(ConfigInvalid):
        LinkSpec("MIM", pair_source_rate_hz=1e6)
    with pytest.raises(ConfigInvalid):
        LinkSpec(threshold_fidelity=0.5)
    assert LinkSpec("MM", length_km=3).legs_km == (3.0, 0.0)
    assert LinkSpec("MIM", length_km=3).legs_km == (1.5, 1.5)


def test_round_trip_for_one_km_legs():
    # BSA 1 km from each node: photon out 5 us, herald back 5 us
    t = link_timing(LinkSpec("MIM", length_km=2.0))
    assert t.heralded == pytest.approx(10e-6, abs=1e-18)
    t = link_timing(LinkSpec("MM", length_km=1.0))
    assert t.heralded == pytest.approx(10e-6, abs=1e-18)


def test_msm_timing():
    t = link_timing(LinkSpec("MSM", length_km=2.0))
    # each node waits for the far node's result: 1 km to the source, then 2 km of notice
    assert t.heralded == pytest.approx(15e-6, abs=1e-18)


def test_attempt_period_limits():
    assert attempt_period(LinkSpec(length_km=1.0, attempt_rate_hz=1e3)) == pytest.approx(1e-3)
    assert attempt_period(LinkSpec(length_km=100.0, attempt_rate_hz=1e9)) == pytest.approx(5e-4)
    spec = LinkSpec("MSM", length_km=1.0, attempt_rate_hz=1e9, pair_source_rate_hz=1e3)
    assert attempt_period(spec) == pytest.approx(1e-3)


def test_herald_probability_closed_forms():
    s = 10 ** (-0.2 * 25 / 10)
    assert herald_probability(LinkSpec("MIM", length_km=50)) == pytest.approx(0.5 * s * s)
    assert herald_probability(LinkSpec("MM", length_km=50)) == pytest.approx(0.5 * 10 ** (-1.0))
    msm = herald_probability(LinkSpec("MSM", length_km=50, detector_efficiency=0.9))
    assert msm == pytest.approx((0.5 * 0.81 * s) ** 2)


def test_simulated_heralds_match_probability():
    spec = LinkSpec("MIM", length_km=20)
    rate = simulate_heralds(spec, 200_000, make_rng(4)).mean()
    p = herald_probability(spec)
    assert abs(rate - p) < 4 * math.sqrt(p * (1 - p) / 200_000)


def test_ideal_memories_give_perfect_pairs():
    spec = LinkSpec("MIM", length_km=5)
    traces = run_link(spec, make_rng(5))
    last = traces[-1]
    assert last.kept and all(not t.kept for t in traces[:-1])
    assert last.pair_fidelity == pytest.approx(1.0, abs=1e-12)
    assert last.pair_label in (BellLabel.PsiPlus, BellLabel.PsiMinus)
    assert [t.attempt for t in traces] == list(range(len(traces)))
    rec = last.to_record()
    assert rec["kept"] and rec["projected"] == last.bsa.projected.value


def test_msm_pairs_and_traces():
    traces = run_link(LinkSpec("MSM", length_km=2), make_rng(6))
    last = traces[-1]
    assert last.bsa_right is not None
    assert fidelity(last.post_pair, last.pair_label.vector) == pytest.approx(1.0, abs=1e-12)


def test_generator_respects_max_attempts():
    spec = LinkSpec(length_km=400)
    assert len(list(generate_link_entanglement(spec, make_rng(7), max_attempts=5))) == 5


def test_memory_dephasing_lowers_raw_fidelity():
    spec = LinkSpec("MIM", length_km=10, memory_T2_s=(1e-3, 1e-3))
    storage = link_timing(spec).storage_left
    expected = (1 + math.exp(-2 * storage / 1e-3)) / 2
    assert expected_raw_fidelity(spec) == pytest.approx(expected, abs=1e-12)


def test_purification_plan_and_multiplier():
    rounds, fids, keeps = purification_plan(0.8, 0.95)
    assert rounds == 2
    assert fids[1] == pytest.approx(recurrence(0.8)[0])
    assert pair_multiplier(keeps) == pytest.approx(4 / (keeps[0] * keeps[1]))
    with pytest.raises(UnreachableThreshold):
        purification_plan(0.5, 0.9)


def test_link_cost_analytic_vs_monte_carlo():
    for arch in ("MIM", "MM", "MSM"):
        spec = LinkSpec(arch, length_km=10, memory_T2_s=(0.02, 0.02), threshold_fidelity=0.999)
        a = link_cost(spec)
        m = link_cost(spec, "monte_carlo", make_rng(8), trials=200_000)
        assert a.purification_rounds >= 1
        assert m.seconds_per_bell_pair_at_threshold == pytest.approx(a.seconds_per_bell_pair_at_threshold, rel=0.05)


def test_link_cost_unreachable():
    with pytest.raises(UnreachableThreshold):
        link_cost(LinkSpec(length_km=10, detector_efficiency=0.0))
