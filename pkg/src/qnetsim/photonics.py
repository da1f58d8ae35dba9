"""Closed-form optics: decibels, modal dispersion, refraction, numerical
aperture, laser rate-equation fixed points, two-wave interference and
attenuated-laser photon statistics.

Angles are in radians. The speed of light is the rounded 2.998e8 m/s, which
is the value the reference numbers were worked with.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    FrequencyMismatch,
    InvalidIndices,
    NegativeInput,
    NegativeMean,
    NonPositivePower,
    NoTIRPossible,
    ZeroDenominator,
)

C_LIGHT = 2.998e8  # m/s
PLANCK = 6.62607015e-34  # J s
FIBER_INDEX = 1.5
ONE_WAY_S_PER_M = 5e-9  # light in glass, c/n = 2e8 m/s


# Decibels ------------------------------------------------------------------------


def db_loss(p_out: float, p_in: float = 1.0) -> float:
    """-10 log10(p_out / p_in)."""
    if p_in <= 0 or p_out <= 0:
        raise NonPositivePower("powers must be positive")
    if p_out > p_in:
        raise NonPositivePower("output power exceeds input power; that is gain, not loss")
    return -10.0 * math.log10(p_out / p_in)


def fraction_from_db(db: float) -> float:
    return 10.0 ** (-db / 10.0)


# Dispersion ----------------------------------------------------------------------


@dataclass(frozen=True)
class FiberPhysical:
    n_core: float
    n_clad: float
    alpha_db_per_km: float = 0.0
    length_km: float = 0.0

    def __post_init__(self):
        if not self.n_core > self.n_clad >= 1.0:
            raise InvalidIndices(f"need n_core > n_clad >= 1, got {self.n_core}, {self.n_clad}")
        if self.alpha_db_per_km < 0 or self.length_km < 0:
            raise NegativeInput("attenuation and length must be non-negative")


@dataclass(frozen=True)
class Dispersion:
    dt_per_km: float  # seconds per km
    spread_m_per_km: float
    min_pulse_separation_m: float  # per km of fiber


def dispersion_delay(f: FiberPhysical) -> Dispersion:
    """Spread between the axial ray and the steepest guided ray, per km."""
    ratio = f.n_core / f.n_clad - 1.0
    dt = 1000.0 * f.n_core / C_LIGHT * ratio
    spread = (C_LIGHT / f.n_core) * dt
    return Dispersion(dt, spread, 2.0 * spread)


# Geometric optics ------------------------------------------------------------------


@dataclass(frozen=True)
class TotalInternalReflection:
    critical_angle: float


def _check_index(*ns):
    if any(n < 1.0 for n in ns):
        raise InvalidIndices("refractive indices must be at least 1")


def snell_refraction(n_i: float, n_r: float, theta_i: float):
    """Refracted angle, or ``TotalInternalReflection`` past the critical angle."""
    _check_index(n_i, n_r)
    if not 0.0 <= theta_i < math.pi / 2:
        raise InvalidIndices("incidence angle must lie in [0, pi/2)")
    s = n_i * math.sin(theta_i) / n_r
    if s > 1.0:
        return TotalInternalReflection(critical_angle(n_i, n_r))
    return math.asin(s)


def critical_angle(n_i: float, n_r: float) -> float:
    _check_index(n_i, n_r)
    if n_i <= n_r:
        raise NoTIRPossible("total internal reflection needs n_i > n_r")
    return math.asin(n_r / n_i)


@dataclass(frozen=True)
class Acceptance:
    NA: float
    theta_max: float
    cone: float


def numerical_aperture(n_i: float, n_f: float, n_c: float) -> Acceptance:
    """NA = sqrt(n_f^2 - n_c^2); acceptance half-angle from n_i sin(theta) = NA."""
    _check_index(n_i, n_f, n_c)
    if n_f <= n_c:
        raise NoTIRPossible("a guiding fiber needs n_core > n_clad")
    na = math.sqrt(n_f**2 - n_c**2)
    # every ray entering the face is guided once NA reaches n_i
    theta = math.asin(min(na / n_i, 1.0))
    return Acceptance(na, theta, 2.0 * theta)


# Laser ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LaserParams:
    G: float
    N0: float
    k: float
    alpha_l: float

    def __post_init__(self):
        if self.G <= 0 or self.k <= 0 or self.alpha_l <= 0 or self.N0 < 0:
            raise NegativeInput("need G, k, alpha_l > 0 and N0 >= 0")

    @property
    def threshold(self) -> float:
        return self.k / self.G


@dataclass(frozen=True)
class FixedPoint:
    n: float
    slope: float  # d(ndot)/dn at the point
    stability: str  # "stable", "unstable" or "marginal"


@dataclass(frozen=True)
class LaserAnalysis:
    fixed_points: tuple
    lasing: bool


def photon_rate_of_change(p: LaserParams, n: float) -> float:
    return (p.G * p.N0 - p.k) * n - p.alpha_l * p.G * n * n


def _slope(p: LaserParams, n: float) -> float:
    return (p.G * p.N0 - p.k) - 2.0 * p.alpha_l * p.G * n


def _classify(slope: float, scale: float) -> str:
    if abs(slope) <= 1e-12 * max(scale, 1.0):
        return "marginal"
    return "stable" if slope < 0 else "unstable"


def laser_fixed_points(p: LaserParams) -> LaserAnalysis:
    """Fixed points of ndot = (G N0 - k) n - alpha G n^2 with linear stability."""
    gain = p.G * p.N0 - p.k
    scale = max(p.G * p.N0, p.k)
    points = [FixedPoint(0.0, gain, _classify(gain, scale))]
    if points[0].stability != "marginal" and gain > 0:
        n2 = gain / (p.alpha_l * p.G)
        s = _slope(p, n2)
        points.append(FixedPoint(n2, s, _classify(s, scale)))
    lasing = any(fp.n > 0 and fp.stability == "stable" for fp in points)
    return LaserAnalysis(tuple(points), lasing)


# Waves ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WaveParams:
    A: float
    omega: float
    k: float
    phi0: float = 0.0

    def __post_init__(self):
        if self.A < 0:
            raise NegativeInput("amplitude must be non-negative")


@dataclass(frozen=True)
class Superposition:
    A: float
    alpha: float


@dataclass(frozen=True)
class Velocities:
    v_phase: float
    v_group: float


def interference_sum(w1: WaveParams, w2: WaveParams, same_frequency: bool = True):
    """Resultant of two waves.

    With equal frequencies the sum is a single wave of amplitude A and phase
    alpha. Otherwise returns the phase and group velocities of the beat.
    """
    if same_frequency:
        if w1.omega != w2.omega:
            raise FrequencyMismatch("same_frequency mode needs equal angular frequencies")
        a1, a2 = w1.phi0, w2.phi0
        A2 = w1.A**2 + w2.A**2 + 2 * w1.A * w2.A * math.cos(a2 - a1)
        alpha = math.atan2(w1.A * math.sin(a1) + w2.A * math.sin(a2),
                           w1.A * math.cos(a1) + w2.A * math.cos(a2))
        return Superposition(math.sqrt(max(A2, 0.0)), alpha)
    if w1.k + w2.k == 0:
        raise ZeroDenominator("k1 = -k2 leaves the phase velocity undefined")
    if w1.k == w2.k:
        raise ZeroDenominator("k1 = k2 leaves the group velocity undefined")
    return Velocities(
        (w1.omega + w2.omega) / (w1.k + w2.k),
        (w1.omega - w2.omega) / (w1.k - w2.k),
    )


# Photon statistics ------------------------------------------------------------------


def attenuated_poisson(mean_photons: float, k: int) -> float:
    """P(k photons in a pulse) for a Poisson source of mean ``mean_photons``."""
    if mean_photons < 0:
        raise NegativeMean("mean photon number must be non-negative")
    if k < 0:
        return 0.0
    if mean_photons == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(-mean_photons + k * math.log(mean_photons) - math.lgamma(k + 1))


def photon_rate(power_w: float, wavelength_m: float) -> float:
    """Photons per second carried by a beam: P / (h c / lambda)."""
    if power_w < 0 or wavelength_m <= 0:
        raise NegativeInput("power must be >= 0 and wavelength > 0")
    return power_w * wavelength_m / (PLANCK * C_LIGHT)


def plates_to_single_photon(initial_rate: float, transmit_fraction: float) -> int:
    """Smallest m with initial_rate * transmit_fraction**m < 1."""
    if initial_rate < 0 or not 0 < transmit_fraction < 1:
        raise NegativeInput("need rate >= 0 and 0 < transmit_fraction < 1")
    m = 0
    rate = initial_rate
    while rate >= 1.0:
        rate *= transmit_fraction
        m += 1
    return m


# Fiber timing --------------------------------------------------------------------


def one_way_delay_s(distance_m: float) -> float:
    if distance_m < 0:
        raise NegativeInput("distance must be non-negative")
    return distance_m * ONE_WAY_S_PER_M


def round_trip_s(distance_m: float) -> float:
    return 2.0 * one_way_delay_s(distance_m)
