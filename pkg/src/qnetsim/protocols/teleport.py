"""Single-qubit teleportation over a shared two-qubit resource.

Register order is (input, Alice's half, Bob's half). Alice measures the first
two qubits in the Bell basis and sends two classical bits; Bob may only
correct after those bits arrive.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import linalg as la
from ..entangled import (
    BELL_BITS,
    BELL_FRAME,
    BellLabel,
    bell_branches,
    bell_label,
    nearest_bell,
    sample_branch,
)
from ..errors import DimensionMismatch
from ..qstate import DensityMatrix, as_density, partial_trace

# correction Bob applies for each outcome when the resource is Phi+
CORRECTIONS = {
    BellLabel.PhiPlus: "I",
    BellLabel.PhiMinus: "Z",
    BellLabel.PsiPlus: "X",
    BellLabel.PsiMinus: "ZX",
}
CORRECTION_WORDS = ("I", "Z", "X", "ZX")


def pauli_word_of(m) -> str:
    """Name of the Pauli word in {I, Z, X, ZX} equal to ``m`` up to phase."""
    for w in CORRECTION_WORDS:
        if la.matrices_equal_up_to_phase(m, la.pauli_word(w)):
            return w
    raise ValueError("operator is not one of I, Z, X, ZX up to phase")


def correction_for(outcome, frame: str = "I") -> str:
    """Pauli word that undoes outcome ``outcome`` when the resource is (I x frame)|Phi+>."""
    c = la.pauli_word(CORRECTIONS[bell_label(outcome)])
    return pauli_word_of(c @ la.pauli_word(frame).conj().T)


def resource_frame(resource) -> str:
    labels, _ = nearest_bell(resource)
    return BELL_FRAME[labels[0]]


@dataclass(frozen=True)
class TeleportOutcome:
    bsm_label: BellLabel
    correction: str
    bob_state: DensityMatrix
    classical_bits: tuple
    probability: float
    bob_state_before_correction: DensityMatrix
    message_latency_s: float = 0.0


class TeleportSession:
    """Step-by-step protocol with ordering checks.

    ``measure`` -> ``deliver`` -> ``correct``; correcting before the classical
    bits are delivered raises ``RuntimeError``.
    """

    def __init__(self, input_state, resource, message_latency_s: float = 0.0):
        inp, res = as_density(input_state), as_density(resource)
        if inp.n_qubits != 1 or res.n_qubits != 2:
            raise DimensionMismatch("teleport needs a 1-qubit input and a 2-qubit resource")
        self.input = inp
        self.resource = res
        self.joint = DensityMatrix(np.kron(inp.mat, res.mat), check=False)
        self.latency = float(message_latency_s)
        self.frame = resource_frame(res)
        self.outcome = None
        self.bits_delivered = False
        self.t_measured = None

    def bob_marginal(self) -> DensityMatrix:
        """Bob's state as seen before any message arrives."""
        return partial_trace(self.joint, [2])

    def measure(self, rng, outcome=None, t: float = 0.0):
        branches = bell_branches(self.joint, (0, 1))
        label = bell_label(outcome) if outcome is not None else sample_branch(branches, rng)
        p, post = branches[label]
        if post is None:
            raise ValueError(f"forced outcome {label.value} has zero probability")
        self.outcome = (label, p, post)
        self.t_measured = t
        return BELL_BITS[label]

    def deliver(self):
        if self.outcome is None:
            raise RuntimeError("no measurement result to send yet")
        self.bits_delivered = True
        return self.t_measured + self.latency

    def correct(self) -> TeleportOutcome:
        if not self.bits_delivered:
            raise RuntimeError("Bob cannot correct before the classical bits arrive")
        label, p, post = self.outcome
        word = correction_for(label, self.frame)
        c = la.pauli_word(word)
        bob = DensityMatrix(c @ post.mat @ c.conj().T, check=False)
        return TeleportOutcome(label, word, bob, BELL_BITS[label], p, post, self.latency)


def teleport(input_state, resource, rng, outcome=None, message_latency_s: float = 0.0) -> TeleportOutcome:
    session = TeleportSession(input_state, resource, message_latency_s)
    session.measure(rng, outcome)
    session.deliver()
    return session.correct()


def bob_marginal_before_message(input_state, resource) -> DensityMatrix:
    return TeleportSession(input_state, resource).bob_marginal()
