"""Entanglement swapping: a Bell measurement on the two middle qubits splices
pairs (A, B1) and (B2, C) into a pair (A, C)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import linalg as la
from ..entangled import BellLabel, bell_branches, bell_label, sample_branch
from ..errors import DimensionMismatch
from ..qstate import DensityMatrix, as_density
from .teleport import CORRECTIONS


@dataclass(frozen=True)
class SwapResult:
    outcome: BellLabel
    probability: float
    state_ac: DensityMatrix
    correction: str
    corrected_ac: DensityMatrix


def swap_branches(pair_ab, pair_bc) -> dict:
    ab, bc = as_density(pair_ab), as_density(pair_bc)
    if ab.n_qubits != 2 or bc.n_qubits != 2:
        raise DimensionMismatch("swapping needs two 2-qubit pairs")
    joint = DensityMatrix(np.kron(ab.mat, bc.mat), check=False)
    return bell_branches(joint, (1, 2))


def entanglement_swap(pair_ab, pair_bc, rng, outcome=None) -> SwapResult:
    """Measure the middle qubits; ``correction`` on C restores the Phi+ frame."""
    branches = swap_branches(pair_ab, pair_bc)
    label = bell_label(outcome) if outcome is not None else sample_branch(branches, rng)
    p, ac = branches[label]
    if ac is None:
        raise ValueError(f"forced outcome {label.value} has zero probability")
    word = CORRECTIONS[label]
    full = np.kron(la.I2, la.pauli_word(word))
    corrected = DensityMatrix(full @ ac.mat @ full.conj().T, check=False)
    return SwapResult(label, p, ac, word, corrected)
