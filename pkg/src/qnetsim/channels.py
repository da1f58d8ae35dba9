"""Single-qubit noise channels and fiber photon-loss bookkeeping.

Channels act on density matrices through Kraus operators. Photon loss is a
classical erasure flag rather than a vacuum component of the field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .errors import InvalidProbability, NegativeInput, ZeroProbability
from .qstate import DensityMatrix, as_density, _unchecked

KINDS = ("bitflip", "phaseflip", "depolarizing", "relaxationT1", "dephasingT2")


@dataclass(frozen=True)
class NoiseChannel:
    """A noise map. ``p`` is used by the Pauli channels; ``t`` and ``T`` by the
    T1/T2 memory-decay channels. ``T`` may be ``math.inf`` for a perfect memory."""

    kind: str
    p: float = 0.0
    t: float = 0.0
    T: float = math.inf

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidProbability(f"unknown channel kind {self.kind!r}")
        if self.kind in ("bitflip", "phaseflip", "depolarizing"):
            if not 0.0 <= self.p <= 1.0:
                raise InvalidProbability(f"{self.kind} probability {self.p} outside [0, 1]")
        else:
            if self.t < 0 or not self.T > 0:
                raise NegativeInput(f"{self.kind} needs t >= 0 and T > 0, got t={self.t}, T={self.T}")

    def kraus(self) -> list[np.ndarray]:
        p = self.p
        if self.kind == "bitflip":
            return [math.sqrt(1 - p) * la.I2, math.sqrt(p) * la.X]
        if self.kind == "phaseflip":
            return [math.sqrt(1 - p) * la.I2, math.sqrt(p) * la.Z]
        if self.kind == "depolarizing":
            # (1-p) rho + p I/2  ==  (1 - 3p/4) rho + (p/4)(X rho X + Y rho Y + Z rho Z)
            return [math.sqrt(1 - 3 * p / 4) * la.I2] + [
                math.sqrt(p / 4) * P for P in (la.X, la.Y, la.Z)
            ]
        decay = math.exp(-self.t / self.T)
        if self.kind == "relaxationT1":
            gamma = 1 - decay
            return [
                np.array([[1, 0], [0, math.sqrt(decay)]], dtype=complex),
                np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex),
            ]
        # dephasingT2: coherences scale by exp(-t/T2)
        return [math.sqrt((1 + decay) / 2) * la.I2, math.sqrt((1 - decay) / 2) * la.Z]


def bitflip(p: float) -> NoiseChannel:
    return NoiseChannel("bitflip", p=p)


def phaseflip(p: float) -> NoiseChannel:
    return NoiseChannel("phaseflip", p=p)


def depolarizing(p: float) -> NoiseChannel:
    return NoiseChannel("depolarizing", p=p)


def relaxation_t1(t: float, T1: float) -> NoiseChannel:
    return NoiseChannel("relaxationT1", t=t, T=T1)


def dephasing_t2(t: float, T2: float) -> NoiseChannel:
    return NoiseChannel("dephasingT2", t=t, T=T2)


def apply_channel(state, ch: NoiseChannel, target: int = 0) -> DensityMatrix:
    """sum_k K_k rho K_k^dagger with each Kraus operator embedded on ``target``."""
    rho = as_density(state)
    n = rho.n_qubits
    out = np.zeros_like(rho.mat)
    for k in ch.kraus():
        full = la.embed_gate(k, (target,), n) if n > 1 else k
        out += full @ rho.mat @ full.conj().T
    return _unchecked(out)


def memory_decay(state, wait_s: float, T1: float, T2: float, targets) -> DensityMatrix:
    """T1 relaxation followed by T2 dephasing on each listed memory qubit."""
    rho = as_density(state)
    if wait_s <= 0:
        return rho
    for q in targets:
        if math.isfinite(T1):
            rho = apply_channel(rho, relaxation_t1(wait_s, T1), q)
        if math.isfinite(T2):
            rho = apply_channel(rho, dephasing_t2(wait_s, T2), q)
    return rho


# Fiber loss ------------------------------------------------------------------


@dataclass(frozen=True)
class ErasureOutcome:
    survived: bool
    survival_probability: float


def survival_probability(alpha_db_per_km: float, length_km: float) -> float:
    """Fraction of photons surviving ``length_km`` of fiber: 10^(-alpha L / 10)."""
    if alpha_db_per_km < 0 or length_km < 0:
        raise NegativeInput("attenuation and length must be non-negative")
    return 10.0 ** (-alpha_db_per_km * length_km / 10.0)


def log10_survival(alpha_db_per_km: float, length_km: float) -> float:
    if alpha_db_per_km < 0 or length_km < 0:
        raise NegativeInput("attenuation and length must be non-negative")
    return -alpha_db_per_km * length_km / 10.0


def expected_wait(survival_p: float, attempt_rate_hz: float) -> float:
    """Mean seconds until the first photon gets through: 1 / (p * rate)."""
    if survival_p <= 0:
        raise ZeroProbability("survival probability must be positive")
    if survival_p > 1:
        raise InvalidProbability(f"survival probability {survival_p} exceeds 1")
    if attempt_rate_hz <= 0:
        raise NegativeInput("attempt rate must be positive")
    return 1.0 / (survival_p * attempt_rate_hz)


def erasure(survival_p: float, rng: np.random.Generator) -> ErasureOutcome:
    if not 0.0 <= survival_p <= 1.0:
        raise InvalidProbability(f"survival probability {survival_p} outside [0, 1]")
    return ErasureOutcome(bool(rng.random() < survival_p), survival_p)


def transmit_photon(alpha_db_per_km: float, length_km: float, rng) -> ErasureOutcome:
    return erasure(survival_probability(alpha_db_per_km, length_km), rng)
