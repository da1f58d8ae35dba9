"""Heralded link-level entanglement between two quantum memories.

Each memory emits a photon entangled with it; the photons cross lossy fiber
and meet at a linear-optics Bell state analyzer (BSA) that can only identify
Psi+ and Psi-. Three layouts are supported:

* ``MIM``: BSA somewhere between the nodes (``bsa_position_km`` from the left).
* ``MM``: BSA inside the right node; only the left photon crosses the fiber.
* ``MSM``: an entangled-pair source at ``bsa_position_km`` sends one photon to
  each node, where it meets the local memory photon at a local BSA. Success
  needs both local BSAs to succeed.

Photon loss is a classical erasure. Light in fiber takes 5 ns per meter. An
attempt only starts once the previous one has been heralded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import linalg as la
from .channels import memory_decay, survival_probability
from .entangled import (
    BELL_BITS,
    BELL_ORDER,
    LABEL_FROM_BITS,
    BellLabel,
    bell_density,
    bell_label,
    nearest_bell,
    sample_branch,
    bell_branches,
)
from .errors import ConfigInvalid, DimensionMismatch, UnreachableThreshold
from .photonics import ONE_WAY_S_PER_M
from .protocols.purify import recurrence
from .protocols.swap import swap_branches
from .qstate import DensityMatrix, apply_gate, as_density, fidelity, measure, basis
from .rng import make_rng

ARCHITECTURES = ("MIM", "MM", "MSM")
DETECTORS = ("D1", "D2", "D3", "D4")
PATTERNS = ("D1D4", "D2D3", "D1D2", "D3D4", "single_click", "no_click", "other")

_PAIR_PATTERNS = {
    frozenset({"D1", "D4"}): "D1D4",
    frozenset({"D2", "D3"}): "D2D3",
    frozenset({"D1", "D2"}): "D1D2",
    frozenset({"D3", "D4"}): "D3D4",
}
_PATTERN_LABEL = {
    "D1D4": BellLabel.PsiMinus,
    "D2D3": BellLabel.PsiMinus,
    "D1D2": BellLabel.PsiPlus,
    "D3D4": BellLabel.PsiPlus,
}
_LABEL_PATTERNS = {
    BellLabel.PsiMinus: (("D1", "D4"), ("D2", "D3")),
    BellLabel.PsiPlus: (("D1", "D2"), ("D3", "D4")),
}


# Deterministic Bell measurement ----------------------------------------------------


@dataclass(frozen=True)
class BsmResult:
    label: BellLabel
    probability: float
    bits: tuple


def bsm_circuit(state, rng) -> BsmResult:
    """Bell measurement as CNOT(0->1), then H on qubit 0, then Z on both qubits."""
    rho = as_density(state)
    if rho.n_qubits != 2:
        raise DimensionMismatch("the Bell measurement circuit takes two qubits")
    rho = apply_gate(rho, la.CNOT, (0, 1))
    rho = apply_gate(rho, la.H, 0)
    first = measure(rho, basis("Z", 0), rng)
    second = measure(first.post_state, basis("Z", 1), rng)
    bits = ((1 - first.outcome) // 2, (1 - second.outcome) // 2)
    return BsmResult(LABEL_FROM_BITS[bits], first.probability * second.probability, bits)


# Photonic BSA ------------------------------------------------------------------------


@dataclass(frozen=True)
class BsaResult:
    pattern: str
    projected: BellLabel | None
    kept: bool
    clicks: tuple = ()


def classify_clicks(clicked) -> BsaResult:
    """Map the set of detectors that fired onto a table pattern."""
    clicked = frozenset(clicked)
    if not clicked <= set(DETECTORS):
        raise ValueError(f"unknown detectors in {sorted(clicked)}")
    if len(clicked) == 0:
        pattern = "no_click"
    elif len(clicked) == 1:
        pattern = "single_click"
    else:
        pattern = _PAIR_PATTERNS.get(clicked, "other")
    label = _PATTERN_LABEL.get(pattern)
    return BsaResult(pattern, label, label is not None, tuple(sorted(clicked)))


def _input_label(joint, rng) -> BellLabel:
    if joint is None:
        return BELL_ORDER[int(rng.integers(4))]
    if isinstance(joint, (BellLabel, str)):
        return bell_label(joint)
    rho = as_density(joint)
    if rho.n_qubits != 2:
        raise DimensionMismatch("the BSA takes a two-photon state")
    probs = {lab: (fidelity(rho, lab.vector),) for lab in BELL_ORDER}
    return sample_branch(probs, rng)


def photonic_bsa(
    joint=None,
    detector_efficiency: float = 1.0,
    rng=None,
    left_present: bool = True,
    right_present: bool = True,
    dark_count_prob: float = 0.0,
) -> BsaResult:
    """One shot of the four-detector analyzer.

    ``joint`` is the two-photon input: a Bell label, a two-qubit state (its
    Bell-basis weights are sampled) or ``None`` for a uniformly random Bell
    state. With both photons present, Psi- fires one of (D1, D4) / (D2, D3),
    Psi+ one of (D1, D2) / (D3, D4), and Phi+/- sends both photons into a
    single detector. Each firing detector is independently missed with
    probability 1 - detector_efficiency. Dark counts can only turn a silent
    shot into a single click.
    """
    rng = make_rng(0) if rng is None else rng
    if not 0.0 <= detector_efficiency <= 1.0 or not 0.0 <= dark_count_prob <= 1.0:
        raise ConfigInvalid("efficiencies and probabilities must lie in [0, 1]")
    label = _input_label(joint, rng)
    if left_present and right_present:
        if label in _LABEL_PATTERNS:
            hit = _LABEL_PATTERNS[label][int(rng.integers(2))]
        else:
            hit = (DETECTORS[int(rng.integers(4))],)
    elif left_present or right_present:
        hit = (DETECTORS[int(rng.integers(4))],)
    else:
        hit = ()
    clicked = {d for d in hit if rng.random() < detector_efficiency}
    if not clicked and dark_count_prob > 0 and rng.random() < dark_count_prob:
        clicked = {DETECTORS[int(rng.integers(4))]}
    return classify_clicks(clicked)


def bsa_success_probability(detector_efficiency: float = 1.0) -> float:
    """Chance of a kept result for two present photons in a uniformly random Bell state."""
    return 0.5 * detector_efficiency**2


# Link parameters ---------------------------------------------------------------------


def _pair(value, name) -> tuple[float, float]:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigInvalid(f"{name} needs one value per end")
        out = (float(value[0]), float(value[1]))
    else:
        out = (float(value), float(value))
    if any(not v > 0 for v in out):
        raise ConfigInvalid(f"{name} must be positive")
    return out


@dataclass(frozen=True)
class LinkSpec:
    architecture: str = "MIM"
    length_km: float = 1.0
    alpha_db_per_km: float = 0.2
    bsa_position_km: float | None = None
    memory_T1_s: tuple = (math.inf, math.inf)
    memory_T2_s: tuple = (math.inf, math.inf)
    attempt_rate_hz: float = 1e6
    detector_efficiency: float = 1.0
    pair_source_rate_hz: float | None = None
    threshold_fidelity: float = 0.9
    dark_count_prob: float = 0.0

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ConfigInvalid(f"architecture must be one of {ARCHITECTURES}")
        if self.length_km < 0 or self.alpha_db_per_km < 0:
            raise ConfigInvalid("length and attenuation must be non-negative")
        pos = self.bsa_position_km
        if self.architecture == "MM":
            if pos is not None and pos != self.length_km:
                raise ConfigInvalid("MM keeps its BSA at the right node; omit bsa_position_km")
            pos = self.length_km
        elif pos is None:
            pos = self.length_km / 2
        if not 0 <= pos <= self.length_km:
            raise ConfigInvalid("bsa_position_km must lie within the link")
        object.__setattr__(self, "bsa_position_km", float(pos))
        object.__setattr__(self, "memory_T1_s", _pair(self.memory_T1_s, "memory_T1_s"))
        object.__setattr__(self, "memory_T2_s", _pair(self.memory_T2_s, "memory_T2_s"))
        if not self.attempt_rate_hz > 0:
            raise ConfigInvalid("attempt_rate_hz must be positive")
        if not 0.0 <= self.detector_efficiency <= 1.0:
            raise ConfigInvalid("detector_efficiency must lie in [0, 1]")
        if not 0.0 <= self.dark_count_prob <= 1.0:
            raise ConfigInvalid("dark_count_prob must lie in [0, 1]")
        if not 0.5 < self.threshold_fidelity <= 1.0:
            raise ConfigInvalid("threshold_fidelity must lie in (0.5, 1]")
        if self.pair_source_rate_hz is not None:
            if self.architecture != "MSM":
                raise ConfigInvalid("pair_source_rate_hz only applies to MSM links")
            if not self.pair_source_rate_hz > 0:
                raise ConfigInvalid("pair_source_rate_hz must be positive")

    @property
    def legs_km(self) -> tuple[float, float]:
        """Fiber length each photon crosses: (left, right)."""
        return self.bsa_position_km, self.length_km - self.bsa_position_km


@dataclass(frozen=True)
class LinkTiming:
    """Offsets from the start of an attempt, in seconds."""

    bsa: float
    heralded: float
    heralded_left: float
    heralded_right: float
    storage_left: float
    storage_right: float


def link_timing(spec: LinkSpec) -> LinkTiming:
    dl, dr = (d * 1000.0 * ONE_WAY_S_PER_M for d in spec.legs_km)
    total = spec.length_km * 1000.0 * ONE_WAY_S_PER_M
    if spec.architecture in ("MIM", "MM"):
        # emissions are staggered so both photons reach the BSA together
        t_bsa = max(dl, dr)
        hl, hr = t_bsa + dl, t_bsa + dr
        t_emit_l, t_emit_r = t_bsa - dl, t_bsa - dr
    else:
        # source photons reach the nodes; each node then needs the other's result
        t_bsa = max(dl, dr)
        hl, hr = max(dl, dr + total), max(dr, dl + total)
        t_emit_l, t_emit_r = dl, dr
    t_h = max(hl, hr)
    return LinkTiming(t_bsa, t_h, hl, hr, t_h - t_emit_l, t_h - t_emit_r)


def attempt_period(spec: LinkSpec) -> float:
    """Time between attempt starts: the rate limit or the herald round trip."""
    period = max(1.0 / spec.attempt_rate_hz, link_timing(spec).heralded)
    if spec.pair_source_rate_hz is not None:
        period = max(period, 1.0 / spec.pair_source_rate_hz)
    return period


def photon_survival(spec: LinkSpec) -> tuple[float, float]:
    dl, dr = spec.legs_km
    return (
        survival_probability(spec.alpha_db_per_km, dl),
        survival_probability(spec.alpha_db_per_km, dr),
    )


def herald_probability(spec: LinkSpec) -> float:
    sl, sr = photon_survival(spec)
    eta = spec.detector_efficiency
    if spec.architecture == "MSM":
        return bsa_success_probability(eta) * sl * bsa_success_probability(eta) * sr
    return bsa_success_probability(eta) * sl * sr


# Post-herald state ---------------------------------------------------------------------


@lru_cache(maxsize=None)
def _projected_pairs() -> dict:
    """Memory-memory states after the photons are projected on each Bell label."""
    phi = bell_density(BellLabel.PhiPlus)
    return {lab: post for lab, (p, post) in swap_branches(phi, phi).items()}


def _msm_pair(left: BellLabel, right: BellLabel) -> DensityMatrix:
    phi = bell_density(BellLabel.PhiPlus)
    first = swap_branches(phi, phi)[left][1]  # memory L with the right source photon
    joint = DensityMatrix(np.kron(first.mat, phi.mat), check=False)
    return bell_branches(joint, (1, 2))[right][1]


def heralded_pair(spec: LinkSpec, labels, extra_wait_s: float = 0.0) -> tuple[DensityMatrix, BellLabel]:
    """Memory pair at herald time (plus ``extra_wait_s``) and its nominal Bell label."""
    if extra_wait_s < 0:
        raise ConfigInvalid("extra wait must be non-negative")
    if spec.architecture == "MSM":
        rho = _msm_pair(*labels)
    else:
        rho = _projected_pairs()[labels[0]]
    nominal = nearest_bell(rho)[0][0]
    timing = link_timing(spec)
    for q, storage in ((0, timing.storage_left), (1, timing.storage_right)):
        rho = memory_decay(rho, storage + extra_wait_s, spec.memory_T1_s[q], spec.memory_T2_s[q], (q,))
    return rho, nominal


def expected_raw_fidelity(spec: LinkSpec, extra_wait_s: float = 0.0) -> float:
    """Mean fidelity of a heralded pair to its nominal Bell state."""
    if spec.architecture == "MSM":
        combos = [(a, b) for a in _LABEL_PATTERNS for b in _LABEL_PATTERNS]
    else:
        combos = [(a,) for a in _LABEL_PATTERNS]
    fids = []
    for labels in combos:
        rho, nominal = heralded_pair(spec, labels, extra_wait_s)
        fids.append(fidelity(rho, nominal.vector))
    return float(np.mean(fids))


# Attempt simulation ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AttemptTrace:
    attempt: int
    t_emit: float
    t_bsa: float
    t_heralded: float
    survived_left: bool
    survived_right: bool
    bsa: BsaResult
    bsa_right: BsaResult | None = None
    post_pair: DensityMatrix | None = field(default=None, repr=False)
    pair_label: BellLabel | None = None
    pair_fidelity: float | None = None

    @property
    def kept(self) -> bool:
        return self.post_pair is not None

    def to_record(self) -> dict:
        rec = {
            "attempt": self.attempt,
            "t_emit": self.t_emit,
            "t_bsa": self.t_bsa,
            "t_heralded": self.t_heralded,
            "survived_left": self.survived_left,
            "survived_right": self.survived_right,
            "pattern": self.bsa.pattern,
            "projected": self.bsa.projected.value if self.bsa.projected else None,
            "kept": self.kept,
            "pair_label": self.pair_label.value if self.pair_label else None,
            "pair_fidelity": self.pair_fidelity,
        }
        if self.bsa_right is not None:
            rec["pattern_right"] = self.bsa_right.pattern
            rec["projected_right"] = self.bsa_right.projected.value if self.bsa_right.projected else None
        return rec


def _one_attempt(spec: LinkSpec, index: int, t0: float, rng) -> AttemptTrace:
    sl, sr = photon_survival(spec)
    timing = link_timing(spec)
    left = bool(rng.random() < sl)
    right = bool(rng.random() < sr)
    eta, dark = spec.detector_efficiency, spec.dark_count_prob
    if spec.architecture == "MSM":
        # each node: local memory photon meets the arriving source photon
        bsa_l = photonic_bsa(None, eta, rng, True, left, dark)
        bsa_r = photonic_bsa(None, eta, rng, right, True, dark)
        labels = (bsa_l.projected, bsa_r.projected)
        ok = bsa_l.kept and bsa_r.kept
    else:
        bsa_l = photonic_bsa(None, eta, rng, left, right, dark)
        bsa_r = None
        labels = (bsa_l.projected,)
        ok = bsa_l.kept
    pair = label = fid = None
    if ok:
        pair, label = heralded_pair(spec, labels)
        fid = fidelity(pair, label.vector)
    return AttemptTrace(
        index, t0, t0 + timing.bsa, t0 + timing.heralded,
        left, right, bsa_l, bsa_r, pair, label, fid,
    )


def generate_link_entanglement(spec: LinkSpec, rng, max_attempts: int | None = None, t_start: float = 0.0):
    """Yield one ``AttemptTrace`` per attempt, stopping after the first success."""
    period = attempt_period(spec)
    k = 0
    while max_attempts is None or k < max_attempts:
        trace = _one_attempt(spec, k, t_start + k * period, rng)
        yield trace
        if trace.kept:
            return
        k += 1


def run_link(spec: LinkSpec, rng, max_attempts: int | None = None, t_start: float = 0.0) -> list[AttemptTrace]:
    return list(generate_link_entanglement(spec, rng, max_attempts, t_start))


def simulate_heralds(spec: LinkSpec, n_attempts: int, rng) -> np.ndarray:
    """Vectorized success flags for ``n_attempts`` independent attempts.

    Uses the same photon-survival, Bell-label and detector model as
    ``photonic_bsa``: a kept shot needs both photons, a Psi label and both
    detector clicks.
    """
    sl, sr = photon_survival(spec)
    eta = spec.detector_efficiency

    def local(p_left, p_right):
        both = (rng.random(n_attempts) < p_left) & (rng.random(n_attempts) < p_right)
        psi = rng.integers(0, 4, n_attempts) >= 2
        clicks = (rng.random(n_attempts) < eta) & (rng.random(n_attempts) < eta)
        return both & psi & clicks

    if spec.architecture == "MSM":
        return local(1.0, sl) & local(sr, 1.0)
    return local(sl, sr)


# Cost ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class LinkCost:
    seconds_per_bell_pair_at_threshold: float
    purification_rounds: int
    base_time_s: float
    raw_fidelity: float
    final_fidelity: float
    pair_multiplier: float
    herald_probability: float
    attempt_period_s: float


MAX_ROUNDS = 64


def purification_plan(raw_fidelity: float, threshold: float) -> tuple[int, list[float], list[float]]:
    """Fewest recurrence rounds reaching ``threshold``; also fidelities and keep rates."""
    fids, keeps = [raw_fidelity], []
    while fids[-1] < threshold - 1e-12:
        if fids[-1] <= 0.5 or len(keeps) >= MAX_ROUNDS:
            raise UnreachableThreshold(
                f"fidelity {raw_fidelity:.6g} cannot be purified up to {threshold:.6g}"
            )
        f, keep = recurrence(fids[-1])
        fids.append(f)
        keeps.append(keep)
    return len(keeps), fids, keeps


def pair_multiplier(keeps) -> float:
    """Expected raw pairs per output pair: each round doubles and divides by its keep rate."""
    m = 1.0
    for keep in keeps:
        m = 2.0 * m / keep
    return m


def _sample_pairs_consumed(keeps, trials: int, rng) -> np.ndarray:
    """Raw pairs consumed per output pair, sampled through the purification tree."""
    if not keeps:
        return np.ones(trials)
    tries = rng.geometric(keeps[-1], size=trials)
    below = _sample_pairs_consumed(keeps[:-1], int(2 * tries.sum()), rng)
    starts = np.concatenate(([0], np.cumsum(2 * tries)[:-1]))
    return np.add.reduceat(below, starts)


def link_cost(spec: LinkSpec, mode: str = "analytic", rng=None, trials: int = 100_000) -> LinkCost:
    """Seconds per Bell pair at ``spec.threshold_fidelity``.

    ``analytic`` uses closed forms; ``monte_carlo`` samples herald attempts and
    the purification tree with ``trials`` draws each.
    """
    p = herald_probability(spec)
    period = attempt_period(spec)
    raw = expected_raw_fidelity(spec)
    if p <= 0:
        raise UnreachableThreshold("this link never heralds a pair")
    rounds, fids, keeps = purification_plan(raw, spec.threshold_fidelity)
    if mode == "analytic":
        base = period / p
        mult = pair_multiplier(keeps)
    elif mode == "monte_carlo":
        rng = make_rng(0) if rng is None else rng
        ok = int(simulate_heralds(spec, trials, rng).sum())
        if ok == 0:
            raise UnreachableThreshold(f"no heralds in {trials} sampled attempts")
        base = trials * period / ok
        mult = float(_sample_pairs_consumed(keeps, trials, rng).mean())
    else:
        raise ConfigInvalid("mode must be 'analytic' or 'monte_carlo'")
    return LinkCost(base * mult, rounds, base, raw, fids[-1], mult, p, period)


__all__ = [
    "ARCHITECTURES", "AttemptTrace", "BsaResult", "BsmResult", "LinkCost", "LinkSpec",
    "LinkTiming", "PATTERNS", "attempt_period", "bsa_success_probability", "bsm_circuit",
    "classify_clicks", "expected_raw_fidelity", "generate_link_entanglement", "heralded_pair",
    "herald_probability", "link_cost", "link_timing", "pair_multiplier", "photonic_bsa",
    "purification_plan", "run_link", "simulate_heralds", "BELL_BITS",
]
