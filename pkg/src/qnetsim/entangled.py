"""Entangled-state constructors, Bell-basis tools, CHSH correlators and a
monogamy spot-check for three-qubit pure states."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations

import numpy as np

from . import linalg as la
from .errors import DimensionMismatch, EmptyRow, InvalidGraph, InvalidSize
from .qstate import (
    DensityMatrix,
    ObservableBasis,
    PureState,
    as_density,
    fidelity,
    partial_trace,
    purity,
    OBSERVABLES,
)


class BellLabel(str, Enum):
    PhiPlus = "PhiPlus"
    PhiMinus = "PhiMinus"
    PsiPlus = "PsiPlus"
    PsiMinus = "PsiMinus"

    @property
    def vector(self) -> np.ndarray:
        return _BELL_VECTORS[self]


BELL_ORDER = (BellLabel.PhiPlus, BellLabel.PhiMinus, BellLabel.PsiPlus, BellLabel.PsiMinus)

_BELL_VECTORS = {
    BellLabel.PhiPlus: (la.ket("00") + la.ket("11")) / la.SQRT2,
    BellLabel.PhiMinus: (la.ket("00") - la.ket("11")) / la.SQRT2,
    BellLabel.PsiPlus: (la.ket("01") + la.ket("10")) / la.SQRT2,
    BellLabel.PsiMinus: (la.ket("01") - la.ket("10")) / la.SQRT2,
}

# |label> = (I x P)|Phi+> up to a global phase, with P given as a Pauli word
BELL_FRAME = {
    BellLabel.PhiPlus: "I",
    BellLabel.PhiMinus: "Z",
    BellLabel.PsiPlus: "X",
    BellLabel.PsiMinus: "XZ",
}


def bell_label(name) -> BellLabel:
    if isinstance(name, BellLabel):
        return name
    aliases = {
        "phi+": BellLabel.PhiPlus, "phi-": BellLabel.PhiMinus,
        "psi+": BellLabel.PsiPlus, "psi-": BellLabel.PsiMinus,
    }
    key = str(name)
    if key.lower() in aliases:
        return aliases[key.lower()]
    return BellLabel(key)


def bell_state(label) -> PureState:
    return PureState(bell_label(label).vector)


def bell_density(label) -> DensityMatrix:
    return bell_state(label).to_density()


def ghz(n: int) -> PureState:
    """(|0...0> + |1...1>)/sqrt(2) on n qubits."""
    if n < 2:
        raise InvalidSize(f"GHZ state needs n >= 2, got {n}")
    v = np.zeros(2**n, dtype=complex)
    v[0] = v[-1] = 1 / la.SQRT2
    return PureState(v)


def w_state(n: int) -> PureState:
    """Equal superposition of the n single-excitation basis states."""
    if n < 2:
        raise InvalidSize(f"W state needs n >= 2, got {n}")
    v = np.zeros(2**n, dtype=complex)
    for k in range(n):
        v[1 << k] = 1 / np.sqrt(n)
    return PureState(v)


@dataclass(frozen=True)
class GraphSpec:
    """Simple undirected graph on vertices 0..n_vertices-1."""

    n_vertices: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        if self.n_vertices < 1:
            raise InvalidGraph("a graph needs at least one vertex")
        norm = set()
        for e in self.edges:
            a, b = (int(x) for x in e)
            if a == b:
                raise InvalidGraph(f"self-loop on vertex {a}")
            if not (0 <= a < self.n_vertices and 0 <= b < self.n_vertices):
                raise InvalidGraph(f"edge {e} references a missing vertex")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(norm))


def graph_state(g: GraphSpec) -> PureState:
    """Product of CZ over every edge applied to |+>^n."""
    n = g.n_vertices
    idx = np.arange(2**n)
    bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
    parity = np.zeros(2**n, dtype=int)
    for a, b in g.edges:
        parity ^= bits[a] & bits[b]
    v = np.where(parity, -1.0, 1.0).astype(complex) / np.sqrt(2**n)
    return PureState(v)


def bell_decompose(state) -> dict[BellLabel, complex]:
    """Amplitudes of a two-qubit ket in the Bell basis."""
    psi = state if isinstance(state, PureState) else PureState(state)
    if psi.n_qubits != 2:
        raise DimensionMismatch("Bell decomposition needs two qubits")
    return {lab: la.inner_product(lab.vector, psi.vec) for lab in BELL_ORDER}


def bell_fidelities(state) -> dict[BellLabel, float]:
    rho = as_density(state)
    if rho.n_qubits != 2:
        raise DimensionMismatch("Bell fidelities need two qubits")
    return {lab: fidelity(rho, lab.vector) for lab in BELL_ORDER}


def nearest_bell(state, atol: float = 1e-9) -> tuple[tuple[BellLabel, ...], float]:
    """Labels attaining the largest Bell fidelity (ties all returned) and that fidelity."""
    fids = bell_fidelities(state)
    best = max(fids.values())
    return tuple(lab for lab in BELL_ORDER if fids[lab] >= best - atol), best


# CHSH ----------------------------------------------------------------------


def _obs_matrix(o) -> np.ndarray:
    if isinstance(o, ObservableBasis):
        return o.obs
    if isinstance(o, str):
        return OBSERVABLES[o]
    return la.as_matrix(o)


def correlator(state, a, b) -> float:
    """<a x b> on a two-qubit state."""
    rho = as_density(state)
    if rho.n_qubits != 2:
        raise DimensionMismatch("correlator needs a two-qubit state")
    op = np.kron(_obs_matrix(a), _obs_matrix(b))
    return float(np.trace(rho.mat @ op).real)


@dataclass(frozen=True)
class ChshSetting:
    """Measurement choices (A, A-bar) and (B, B-bar) with signs for the terms
    AB, A B-bar, A-bar B, A-bar B-bar in that order."""

    alice: tuple = ("Z", "X")
    bob: tuple = ("(Z-X)/sqrt2", "(Z+X)/sqrt2")
    signs: tuple = (1, 1, 1, -1)

    def __post_init__(self):
        if len(self.alice) != 2 or len(self.bob) != 2 or len(self.signs) != 4:
            raise DimensionMismatch("CHSH needs two settings per party and four signs")
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError(f"signs must be +1 or -1, got {self.signs}")
        for o in (*self.alice, *self.bob):
            m = _obs_matrix(o)
            if m.shape != (2, 2) or not np.allclose(m @ m, la.I2, atol=la.ATOL):
                raise DimensionMismatch("each CHSH observable must be 2x2 and square to I")

    def pairs(self):
        a, abar = self.alice
        b, bbar = self.bob
        return ((a, b), (a, bbar), (abar, b), (abar, bbar))

    def swapped(self) -> "ChshSetting":
        """Same statistic with the two parties' roles exchanged."""
        s = self.signs
        return ChshSetting(self.bob, self.alice, (s[0], s[2], s[1], s[3]))


CHSH_PSI_PLUS = ChshSetting()
CHSH_PHI_MINUS = ChshSetting(signs=(1, 1, 1, -1))
CHSH_PHI_PLUS = ChshSetting(signs=(1, 1, -1, 1))
CHSH_PSI_MINUS = ChshSetting(signs=(1, 1, -1, 1))

CHSH_PRESETS = {
    BellLabel.PsiPlus: CHSH_PSI_PLUS,
    BellLabel.PsiMinus: CHSH_PSI_MINUS,
    BellLabel.PhiPlus: CHSH_PHI_PLUS,
    BellLabel.PhiMinus: CHSH_PHI_MINUS,
}


def chsh_correlators(state, setting: ChshSetting = CHSH_PSI_PLUS) -> tuple[float, ...]:
    return tuple(correlator(state, a, b) for a, b in setting.pairs())


def chsh_from_correlators(values, signs=(1, 1, 1, -1)) -> float:
    if len(values) != 4:
        raise DimensionMismatch("need four correlators")
    return abs(sum(s * v for s, v in zip(signs, values)))


def chsh_value(state, setting: ChshSetting = CHSH_PSI_PLUS) -> float:
    return chsh_from_correlators(chsh_correlators(state, setting), setting.signs)


def correlators_from_counts(counts) -> np.ndarray:
    """Row-wise <MN> = P++ + P-- - P+- - P-+ for columns ordered ++, +-, -+, --."""
    c = np.asarray(counts, dtype=float)
    if c.shape != (4, 4):
        raise DimensionMismatch(f"counts must be 4x4, got {c.shape}")
    if (c < 0).any():
        raise ValueError("counts must be non-negative")
    totals = c.sum(axis=1)
    if (totals <= 0).any():
        raise EmptyRow("every basis pair needs at least one count")
    p = c / totals[:, None]
    return p[:, 0] + p[:, 3] - p[:, 1] - p[:, 2]


def chsh_from_counts(counts, signs=(1, 1, 1, -1)) -> float:
    return chsh_from_correlators(correlators_from_counts(counts), signs)


def joint_outcome_probabilities(state, a, b) -> np.ndarray:
    """Probabilities of (++, +-, -+, --) when measuring a on qubit 0 and b on qubit 1."""
    rho = as_density(state)
    pa = [(la.I2 + s * _obs_matrix(a)) / 2 for s in (1, -1)]
    pb = [(la.I2 + s * _obs_matrix(b)) / 2 for s in (1, -1)]
    probs = np.array(
        [np.trace(rho.mat @ np.kron(pa[i], pb[j])).real for i in (0, 1) for j in (0, 1)]
    )
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def sample_chsh_counts(state, setting: ChshSetting, n_rounds: int, rng) -> np.ndarray:
    """Simulate ``n_rounds`` with uniformly chosen settings; returns 4x4 counts."""
    counts = np.zeros((4, 4), dtype=np.int64)
    which = rng.integers(0, 4, size=n_rounds)
    for k, (a, b) in enumerate(setting.pairs()):
        m = int((which == k).sum())
        counts[k] = rng.multinomial(m, joint_outcome_probabilities(state, a, b))
    return counts


# Monogamy --------------------------------------------------------------------


@dataclass(frozen=True)
class PairReport:
    qubits: tuple
    fidelities: dict
    nearest: tuple
    best_fidelity: float
    other_qubit: int
    other_purity: float


@dataclass(frozen=True)
class MonogamyReport:
    pairs: tuple
    single_purities: dict
    holds: bool


def monogamy_check(state, atol: float = 1e-6) -> MonogamyReport:
    """Check that a maximally entangled pair leaves the third qubit pure."""
    psi = state if isinstance(state, PureState) else PureState(state)
    if psi.n_qubits != 3:
        raise DimensionMismatch("monogamy check needs a three-qubit pure state")
    purities = {q: purity(partial_trace(psi, [q])) for q in range(3)}
    reports = []
    holds = True
    for a, b in combinations(range(3), 2):
        rho = partial_trace(psi, [a, b])
        fids = bell_fidelities(rho)
        labels, best = nearest_bell(rho)
        other = 3 - a - b
        if best >= 1 - atol and purities[other] < 1 - atol:
            holds = False
        reports.append(PairReport((a, b), fids, labels, best, other, purities[other]))
    return MonogamyReport(tuple(reports), purities, holds)


# Bell-basis measurement on part of a register -----------------------------------

# classical bits (c1, c2) read out by the (H x I) CNOT circuit for each label
BELL_BITS = {
    BellLabel.PhiPlus: (0, 0),
    BellLabel.PhiMinus: (1, 0),
    BellLabel.PsiPlus: (0, 1),
    BellLabel.PsiMinus: (1, 1),
}
LABEL_FROM_BITS = {bits: lab for lab, bits in BELL_BITS.items()}


def bell_branches(state, qubits) -> dict[BellLabel, tuple[float, DensityMatrix | None]]:
    """Project ``qubits`` (two of them) onto each Bell state.

    Returns ``label -> (probability, state of the remaining qubits)``; the
    remaining qubits keep their original relative order. Branches with
    probability below 1e-12 carry ``None``.
    """
    rho = as_density(state)
    n = rho.n_qubits
    qubits = la.check_targets(qubits, n)
    if len(qubits) != 2 or n < 3:
        raise DimensionMismatch("Bell projection needs two measured qubits and at least one spectator")
    rest = [q for q in range(n) if q not in qubits]
    t = rho.mat.reshape([2] * (2 * n))
    order = list(qubits) + rest
    t = t.transpose(order + [n + q for q in order])
    dr = 2 ** len(rest)
    m = t.reshape(4, dr, 4, dr)
    out = {}
    for lab in BELL_ORDER:
        v = lab.vector
        post = np.einsum("i,iajb,j->ab", v.conj(), m, v)
        p = float(np.trace(post).real)
        if p < 1e-12:
            out[lab] = (max(p, 0.0), None)
        else:
            out[lab] = (p, DensityMatrix(post / p, check=False))
    return out


def sample_branch(branches: dict, rng):
    """Pick a key of ``branches`` (values start with a probability) by the Born rule."""
    keys = list(branches)
    probs = np.array([branches[k][0] for k in keys], dtype=float)
    probs = probs / probs.sum()
    return keys[int(rng.choice(len(keys), p=probs))]
