"""Two-pair entanglement purification.

Register order is (A1, B1, A2, B2). Both sides apply CNOT from their pair-1
qubit onto their pair-2 qubit, then measure pair 2 in Z. Pair 1 is kept when
the two outcomes agree.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import linalg as la
from ..entangled import BellLabel, bell_density
from ..errors import DimensionMismatch, InvalidProbability
from ..qstate import DensityMatrix, as_density, fidelity


@dataclass(frozen=True)
class PurifyResult:
    kept: bool
    post: DensityMatrix | None
    outcome_bits: tuple
    probability: float
    keep_probability: float


def _bilateral_cnot_state(pair1, pair2) -> np.ndarray:
    p1, p2 = as_density(pair1), as_density(pair2)
    if p1.n_qubits != 2 or p2.n_qubits != 2:
        raise DimensionMismatch("purification needs two 2-qubit pairs")
    rho = np.kron(p1.mat, p2.mat)
    u = la.embed_gate(la.CNOT, (0, 2), 4) @ la.embed_gate(la.CNOT, (1, 3), 4)
    return u @ rho @ u.conj().T


def purify_branches(pair1, pair2) -> dict[tuple, tuple[float, DensityMatrix | None]]:
    """(a, b) -> (probability, state of pair 1) for the Z outcomes on pair 2."""
    rho = _bilateral_cnot_state(pair1, pair2).reshape(4, 4, 4, 4)
    out = {}
    for a in (0, 1):
        for b in (0, 1):
            k = 2 * a + b
            post = rho[:, k, :, k]
            p = float(np.trace(post).real)
            out[(a, b)] = (p, DensityMatrix(post / p, check=False) if p > 1e-12 else None)
    return out


def kept_state(pair1, pair2) -> tuple[float, DensityMatrix]:
    """Probability of keeping and the pair-1 state averaged over agreeing outcomes."""
    br = purify_branches(pair1, pair2)
    p = br[(0, 0)][0] + br[(1, 1)][0]
    if p <= 1e-12:
        raise InvalidProbability("the inputs are never kept")
    mat = sum(br[k][0] * br[k][1].mat for k in ((0, 0), (1, 1)) if br[k][1] is not None)
    return p, DensityMatrix(mat / p, check=False)


def purify(pair1, pair2, rng, outcome=None) -> PurifyResult:
    br = purify_branches(pair1, pair2)
    keep_p = br[(0, 0)][0] + br[(1, 1)][0]
    keys = list(br)
    if outcome is None:
        probs = np.array([br[k][0] for k in keys])
        outcome = keys[int(rng.choice(4, p=probs / probs.sum()))]
    outcome = tuple(int(x) for x in outcome)
    p, post = br[outcome]
    kept = outcome[0] == outcome[1]
    return PurifyResult(kept, post if kept else None, outcome, p, keep_p)


def recurrence(F: float) -> tuple[float, float]:
    """(new fidelity, keep probability) for two bit-flip mixtures of fidelity F."""
    if not 0.0 <= F <= 1.0:
        raise InvalidProbability(f"fidelity {F} outside [0, 1]")
    keep = F**2 + (1 - F) ** 2
    return F**2 / keep, keep


def bitflip_pair(F: float) -> DensityMatrix:
    """F |Phi+><Phi+| + (1 - F) |Psi+><Psi+|."""
    if not 0.0 <= F <= 1.0:
        raise InvalidProbability(f"fidelity {F} outside [0, 1]")
    return DensityMatrix(
        F * bell_density(BellLabel.PhiPlus).mat + (1 - F) * bell_density(BellLabel.PsiPlus).mat
    )


def iterate(F: float, rounds: int) -> list[float]:
    """Fidelity after 0..rounds of recurrence purification."""
    seq = [F]
    for _ in range(rounds):
        seq.append(recurrence(seq[-1])[0])
    return seq


def fidelity_to_phi_plus(rho) -> float:
    return fidelity(rho, BellLabel.PhiPlus.vector)
