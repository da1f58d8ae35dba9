import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qnetsim import linalg as la
from qnetsim.entangled import (
    BELL_BITS,
    BELL_FRAME,
    BELL_ORDER,
    CHSH_PRESETS,
    BellLabel,
    ChshSetting,
    GraphSpec,
    bell_branches,
    bell_decompose,
    bell_density,
    bell_label,
    bell_state,
    chsh_from_counts,
    chsh_value,
    correlator,
    correlators_from_counts,
    ghz,
    graph_state,
    monogamy_check,
    nearest_bell,
    sample_chsh_counts,
    w_state,
)
from qnetsim.errors import DimensionMismatch, EmptyRow, InvalidGraph, InvalidSize
from qnetsim.qstate import PureState, fidelity, partial_trace

from conftest import random_ket

SQ = 1 / math.sqrt(2)


def test_bell_vectors():
    assert np.allclose(bell_state("PhiPlus").vec, [SQ, 0, 0, SQ])
    assert np.allclose(bell_state("PhiMinus").vec, [SQ, 0, 0, -SQ])
    assert np.allclose(bell_state("PsiPlus").vec, [0, SQ, SQ, 0])
    assert np.allclose(bell_state("PsiMinus").vec, [0, SQ, -SQ, 0])


def test_bell_label_aliases():
    assert bell_label("psi-") is BellLabel.PsiMinus
    assert bell_label("PhiPlus") is BellLabel.PhiPlus
    with pytest.raises(ValueError):
        bell_label("chi")


def test_bell_frame_maps_phi_plus_to_each_label():
    phi = BellLabel.PhiPlus.vector
    for lab in BELL_ORDER:
        op = np.kron(la.I2, la.pauli_word(BELL_FRAME[lab]))
        assert la.equal_up_to_phase(op @ phi, lab.vector)


def test_ghz_w_graph_states():
    assert np.allclose(ghz(3).vec[[0, 7]], [SQ, SQ])
    w = w_state(3).vec
    assert np.allclose(w[[1, 2, 4]], 1 / math.sqrt(3))
    with pytest.raises(InvalidSize):
        ghz(1)
    with pytest.raises(InvalidSize):
        w_state(1)
    # two-vertex graph state is locally equivalent to a Bell pair
    g = graph_state(GraphSpec(2, frozenset({(0, 1)})))
    assert np.allclose(g.vec, np.array([1, 1, 1, -1]) / 2)
    with pytest.raises(InvalidGraph):
        GraphSpec(2, frozenset({(0, 0)}))
    with pytest.raises(InvalidGraph):
        GraphSpec(2, frozenset({(0, 2)}))


def test_bell_decompose_and_nearest():
    amps = bell_decompose(PureState.from_label("00"))
    assert abs(amps[BellLabel.PhiPlus]) ** 2 == pytest.approx(0.5)
    assert abs(amps[BellLabel.PhiMinus]) ** 2 == pytest.approx(0.5)
    labels, best = nearest_bell(PureState.from_label("00"))
    assert set(labels) == {BellLabel.PhiPlus, BellLabel.PhiMinus}
    assert best == pytest.approx(0.5)


def test_chsh_presets_reach_tsirelson():
    for lab, setting in CHSH_PRESETS.items():
        assert chsh_value(bell_density(lab), setting) == pytest.approx(2 * math.sqrt(2), abs=1e-12), lab


def test_chsh_swapped_roles_same_value():
    s = CHSH_PRESETS[BellLabel.PsiPlus]
    assert chsh_value(bell_density("PsiPlus"), s.swapped()) == pytest.approx(2 * math.sqrt(2), abs=1e-12)


def test_product_state_respects_classical_bound():
    rho = PureState.from_label("0+").to_density()
    for setting in CHSH_PRESETS.values():
        assert abs(chsh_value(rho, setting)) <= 2 + 1e-12


def test_correlator_values():
    assert correlator(bell_density("PhiPlus"), "Z", "Z") == pytest.approx(1.0)
    assert correlator(bell_density("PsiPlus"), "Z", "Z") == pytest.approx(-1.0)
    assert correlator(bell_density("PsiPlus"), "X", "X") == pytest.approx(1.0)


def test_counts_to_correlators():
    counts = np.array([[10, 0, 0, 10], [0, 5, 5, 0], [1, 1, 1, 1], [3, 1, 1, 3]])
    assert np.allclose(correlators_from_counts(counts), [1, -1, 0, 0.5])
    with pytest.raises(EmptyRow):
        correlators_from_counts(np.zeros((4, 4)))
    with pytest.raises(DimensionMismatch):
        correlators_from_counts(np.ones((3, 4)))


def test_table_with_repeated_row_gives_small_s():
    # repeating the third row as the fourth drops |S| to 1.44
    table = np.array([[0.04, 0.26, 0.60, 0.10]] * 2 + [[0.16, 0.34, 0.48, 0.02]] * 2)
    assert abs(chsh_from_counts(table)) == pytest.approx(1.44, abs=1e-9)


def test_sampled_chsh_close_to_analytic(rng):
    setting = CHSH_PRESETS[BellLabel.PsiPlus]
    counts = sample_chsh_counts(bell_density("PsiPlus"), setting, 40_000, rng)
    assert counts.sum() == 40_000
    assert chsh_from_counts(counts, setting.signs) == pytest.approx(2 * math.sqrt(2), abs=0.08)


def test_chsh_setting_validation():
    with pytest.raises(ValueError):
        ChshSetting(signs=(1, 1, 1, 0))
    with pytest.raises(DimensionMismatch):
        ChshSetting(alice=("Z",))


def test_monogamy():
    bell_and_spectator = PureState(np.kron(bell_state("PhiPlus").vec, la.KET0))
    rep = monogamy_check(bell_and_spectator)
    assert rep.holds
    assert rep.pairs[0].best_fidelity == pytest.approx(1.0)
    ghz_rep = monogamy_check(ghz(3))
    assert all(p.best_fidelity == pytest.approx(0.5) for p in ghz_rep.pairs)


def test_bell_branches_teleport_style():
    # measuring qubits (0, 1) of |+> (x) Phi+ yields each label with probability 1/4
    joint = np.kron(la.KET_PLUS, bell_state("PhiPlus").vec)
    br = bell_branches(joint, (0, 1))
    for lab in BELL_ORDER:
        assert br[lab][0] == pytest.approx(0.25)
    assert set(BELL_BITS.values()) == {(0, 0), (0, 1), (1, 0), (1, 1)}


@given(st.integers(0, 2**32 - 1))
def test_bell_fidelities_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    psi = PureState(random_ket(rng, 2))
    total = sum(fidelity(psi, lab.vector) for lab in BELL_ORDER)
    assert total == pytest.approx(1.0, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_chsh_never_exceeds_tsirelson(seed):
    rng = np.random.default_rng(seed)
    psi = PureState(random_ket(rng, 2))
    for setting in CHSH_PRESETS.values():
        assert abs(chsh_value(psi, setting)) <= 2 * math.sqrt(2) + 1e-12


@given(st.integers(3, 6))
def test_ghz_marginals_are_classical(n):
    red = partial_trace(ghz(n), [0, 1])
    assert np.allclose(red.mat, np.diag([0.5, 0, 0, 0.5]))
