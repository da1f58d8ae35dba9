"""Pure and mixed qubit states, gates, projective measurement and figures of merit."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .errors import (
    ConfigInvalid,
    DimensionMismatch,
    InvalidProbability,
    NonUnitary,
    NonUnitVector,
    ZeroProbabilityBranch,
)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized ket on ``n_qubits`` qubits."""

    vec: np.ndarray

    def __post_init__(self):
        v = la.as_vector(self.vec)
        la.n_qubits_of(v.size)
        norm = np.vdot(v, v).real
        if abs(norm - 1.0) > la.ATOL:
            raise NonUnitVector(f"state norm^2 is {norm}, expected 1")
        object.__setattr__(self, "vec", _readonly(v))

    @property
    def n_qubits(self) -> int:
        return la.n_qubits_of(self.vec.size)

    @property
    def dim(self) -> int:
        return self.vec.size

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        v = la.as_vector(amplitudes)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise NonUnitVector("cannot normalize the zero vector")
        return cls(v / norm)

    @classmethod
    def from_label(cls, label: str) -> "PureState":
        """Product state from symbols 0, 1, +, - (e.g. ``"0+1"``)."""
        if not label:
            raise ConfigInvalid("empty state label")
        parts = []
        i = 0
        while i < len(label):
            if label[i] in "+-" and label[i + 1:i + 2] == "i":
                parts.append(la.NAMED_KETS[label[i:i + 2]])
                i += 2
                continue
            if label[i] not in la.NAMED_KETS:
                raise ConfigInvalid(f"unknown ket symbol {label[i]!r} in {label!r}")
            parts.append(la.NAMED_KETS[label[i]])
            i += 1
        v = parts[0] if len(parts) == 1 else la.tensor(*parts)
        return cls(v)

    @classmethod
    def from_bloch(cls, theta: float, phi: float) -> "PureState":
        return cls([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.vec, self.vec.conj()))

    def __repr__(self):
        return f"PureState(n_qubits={self.n_qubits}, vec={np.round(self.vec, 6).tolist()})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix on ``n_qubits`` qubits."""

    mat: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = la.as_matrix(self.mat)
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"density matrix must be square, got {m.shape}")
        la.n_qubits_of(m.shape[0])
        if self.check:
            validate_density(m)
        object.__setattr__(self, "mat", _readonly(m))

    @property
    def n_qubits(self) -> int:
        return la.n_qubits_of(self.mat.shape[0])

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def maximally_mixed(cls, n_qubits: int = 1) -> "DensityMatrix":
        d = 2**n_qubits
        return cls(np.eye(d, dtype=complex) / d)

    @classmethod
    def mixture(cls, weights, states) -> "DensityMatrix":
        """sum_i p_i |psi_i><psi_i| (states may be pure or mixed)."""
        weights = [float(w) for w in weights]
        if any(w < -la.ATOL for w in weights) or abs(sum(weights) - 1.0) > la.ATOL:
            raise InvalidProbability(f"mixture weights {weights} are not a distribution")
        mats = [as_density(s).mat for s in states]
        return cls(sum(w * m for w, m in zip(weights, mats)))

    def to_density(self) -> "DensityMatrix":
        return self

    def __repr__(self):
        return f"DensityMatrix(n_qubits={self.n_qubits})"


def validate_density(m: np.ndarray, atol: float = la.ATOL) -> None:
    if not np.allclose(m, m.conj().T, atol=atol):
        raise DimensionMismatch("density matrix is not Hermitian")
    tr = np.trace(m)
    if abs(tr - 1.0) > atol:
        raise InvalidProbability(f"density matrix trace is {tr}, expected 1")
    if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -atol:
        raise InvalidProbability("density matrix has a negative eigenvalue")


def is_valid_density(m, atol: float = la.ATOL) -> bool:
    try:
        validate_density(la.as_matrix(m), atol)
    except (DimensionMismatch, InvalidProbability):
        return False
    return True


def as_density(state) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, PureState):
        return state.to_density()
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        return PureState(arr).to_density()
    return DensityMatrix(arr)


def _unchecked(mat) -> DensityMatrix:
    return DensityMatrix(mat, check=False)


# Gates ---------------------------------------------------------------------


def apply_gate(state, gate, targets=0):
    """Apply ``gate`` to ``targets``; returns the same state kind as given."""
    gate = la.as_matrix(gate)
    if not la.is_unitary(gate):
        raise NonUnitary("gate is not unitary within 1e-9")
    if isinstance(state, PureState):
        full = la.embed_gate(gate, targets, state.n_qubits)
        return PureState(full @ state.vec)
    rho = as_density(state)
    full = la.embed_gate(gate, targets, rho.n_qubits)
    return _unchecked(full @ rho.mat @ full.conj().T)


def apply_gates(state, steps):
    """Apply a sequence of ``(gate, targets)`` pairs in order."""
    for gate, targets in steps:
        state = apply_gate(state, gate, targets)
    return state


def rotation_gate(axis, theta: float) -> np.ndarray:
    """exp(-i theta n.sigma / 2) for a unit axis n."""
    n = np.asarray(axis, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > la.ATOL:
        raise NonUnitVector(f"rotation axis {axis} is not a unit 3-vector")
    n_sigma = n[0] * la.X + n[1] * la.Y + n[2] * la.Z
    return np.cos(theta / 2) * la.I2 - 1j * np.sin(theta / 2) * n_sigma


# Measurement ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ObservableBasis:
    """A +/-1 valued observable on ``targets`` with projectors (I +/- obs)/2."""

    obs: np.ndarray
    targets: tuple = (0,)
    label: str = ""

    def __post_init__(self):
        obs = la.as_matrix(self.obs)
        targets = self.targets
        if isinstance(targets, (int, np.integer)):
            targets = (int(targets),)
        targets = tuple(int(t) for t in targets)
        if obs.shape != (2 ** len(targets),) * 2:
            raise DimensionMismatch(f"observable shape {obs.shape} does not fit targets {targets}")
        if not la.is_hermitian(obs) or not np.allclose(obs @ obs, np.eye(obs.shape[0]), atol=la.ATOL):
            raise DimensionMismatch(f"observable {self.label or ''} must be Hermitian with obs^2 = I")
        object.__setattr__(self, "obs", _readonly(obs))
        object.__setattr__(self, "targets", targets)

    def projector(self, outcome: int) -> np.ndarray:
        eye = np.eye(self.obs.shape[0], dtype=complex)
        return (eye + outcome * self.obs) / 2

    def on(self, *targets) -> "ObservableBasis":
        return ObservableBasis(self.obs, targets, self.label)


OBSERVABLES = {
    "Z": la.Z,
    "X": la.X,
    "Y": la.Y,
    "(Z+X)/sqrt2": (la.Z + la.X) / la.SQRT2,
    "(Z-X)/sqrt2": (la.Z - la.X) / la.SQRT2,
}


def basis(label: str, target: int = 0) -> ObservableBasis:
    """Named single-qubit observable: Z, X, Y, (Z+X)/sqrt2, (Z-X)/sqrt2."""
    return ObservableBasis(OBSERVABLES[label], (target,), label)


@dataclass(frozen=True)
class MeasurementRecord:
    outcome: int
    probability: float
    post_state: object


def outcome_probabilities(state, obs: ObservableBasis) -> dict[int, float]:
    """Born-rule probabilities of the +1 and -1 outcomes."""
    if isinstance(state, PureState):
        full = la.embed_gate(obs.obs, obs.targets, state.n_qubits)
        ev = float(np.vdot(state.vec, full @ state.vec).real)
    else:
        rho = as_density(state)
        full = la.embed_gate(obs.obs, obs.targets, rho.n_qubits)
        ev = float(np.trace(full @ rho.mat).real)
    p_plus = min(max((1 + ev) / 2, 0.0), 1.0)
    return {+1: p_plus, -1: 1.0 - p_plus}


def project(state, obs: ObservableBasis, outcome: int):
    """Collapse ``state`` onto ``outcome``; returns (probability, post_state)."""
    n = state.n_qubits
    proj = la.embed_gate(obs.projector(outcome), obs.targets, n)
    if isinstance(state, PureState):
        v = proj @ state.vec
        p = float(np.vdot(v, v).real)
        if p < 1e-12:
            raise ZeroProbabilityBranch(f"outcome {outcome} has probability {p}")
        return p, PureState(v / np.sqrt(p))
    rho = as_density(state)
    m = proj @ rho.mat @ proj
    p = float(np.trace(m).real)
    if p < 1e-12:
        raise ZeroProbabilityBranch(f"outcome {outcome} has probability {p}")
    return p, _unchecked(m / p)


def measure(state, obs: ObservableBasis, rng: np.random.Generator) -> MeasurementRecord:
    """Sample a projective measurement of ``obs`` and collapse the state."""
    probs = outcome_probabilities(state, obs)
    outcome = +1 if rng.random() < probs[+1] else -1
    p, post = project(state, obs, outcome)
    return MeasurementRecord(outcome, p, post)


def expectation(state, obs: ObservableBasis) -> float:
    probs = outcome_probabilities(state, obs)
    return probs[+1] - probs[-1]


def variance(state, obs: ObservableBasis) -> float:
    return 1.0 - expectation(state, obs) ** 2


def expectation_of(state, operator) -> float:
    """<A> = Tr(rho A) for an arbitrary Hermitian operator on the full system."""
    rho = as_density(state)
    return float(np.trace(rho.mat @ la.as_matrix(operator)).real)


# Figures of merit ------------------------------------------------------------


def purity(state) -> float:
    m = as_density(state).mat
    return float(np.trace(m @ m).real)


def fidelity(state, target) -> float:
    """<psi|rho|psi> against a pure target."""
    rho = as_density(state)
    psi = target.vec if isinstance(target, PureState) else la.as_vector(target)
    if psi.size != rho.dim:
        raise DimensionMismatch(f"state dim {rho.dim} vs target dim {psi.size}")
    return float(np.vdot(psi, rho.mat @ psi).real)


def bloch_coordinates(state) -> tuple[float, float, float]:
    rho = as_density(state)
    if rho.n_qubits != 1:
        raise DimensionMismatch("Bloch coordinates need a single qubit")
    m = rho.mat
    return (
        float(np.trace(m @ la.X).real),
        float(np.trace(m @ la.Y).real),
        float(np.trace(m @ la.Z).real),
    )


def partial_trace(state, keep) -> DensityMatrix:
    """Reduced density matrix on the qubits listed in ``keep`` (in that order)."""
    rho = as_density(state)
    n = rho.n_qubits
    keep = la.check_targets(keep, n)
    drop = [q for q in range(n) if q not in keep]
    t = rho.mat.reshape([2] * (2 * n))
    # bring kept row axes, dropped row axes, kept col axes, dropped col axes
    t = t.transpose(list(keep) + drop + [n + q for q in keep] + [n + q for q in drop])
    dk, dd = 2 ** len(keep), 2 ** len(drop)
    t = t.reshape(dk, dd, dk, dd)
    return _unchecked(np.einsum("ajbj->ab", t))


# Mach-Zehnder ----------------------------------------------------------------


def mach_zehnder(state, block_lower: bool = False) -> dict[str, float]:
    """Detection probabilities for a single photon through the interferometer.

    Path |0> feeds detector D0 and path |1> feeds D1 after the second beam
    splitter. Blocking absorbs the |1> (lower) path between the splitters.
    """
    psi = state if isinstance(state, PureState) else PureState(state)
    if psi.n_qubits != 1:
        raise DimensionMismatch("the interferometer takes a single-qubit path state")
    mid = la.BS1 @ psi.vec
    absorbed = 0.0
    if block_lower:
        absorbed = float(abs(mid[1]) ** 2)
        mid = np.array([mid[0], 0.0], dtype=complex)
    out = la.BS2 @ mid
    return {
        "D0": float(abs(out[0]) ** 2),
        "D1": float(abs(out[1]) ** 2),
        "absorbed": absorbed,
    }
