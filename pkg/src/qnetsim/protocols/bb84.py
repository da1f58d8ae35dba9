"""BB84 prepare-and-measure key distribution.

Alice encodes bit a in basis b (0 = Z, 1 = X) as the +1 eigenstate for a = 0
and the -1 eigenstate for a = 1; Bob measures in basis b'. Rounds where the
bases agree are kept, a random subset of those is publicly compared, and the
rest form the key.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import linalg as la
from ..channels import NoiseChannel, apply_channel
from ..errors import ConfigInvalid
from ..qstate import as_density
from ..rng import make_rng
from .keys import KeyReport, bits_from

EVE_MODES = ("absent", "intercept_resend", "basis_informed")

# ENCODING[basis][bit]
ENCODING = (
    (la.KET0, la.KET1),
    (la.KET_PLUS, la.KET_MINUS),
)


@dataclass(frozen=True)
class Bb84Config:
    n: int
    eve_mode: str = "absent"
    eve_fraction: float = 1.0
    test_fraction: float = 0.5
    n_test: int | None = None
    rng_seed: int = 0
    abort_mismatch_fraction: float | None = None
    channel: NoiseChannel | None = None
    alice_bits: str | None = None
    alice_bases: str | None = None
    bob_bases: str | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ConfigInvalid("n must be at least 1")
        if self.eve_mode not in EVE_MODES:
            raise ConfigInvalid(f"eve_mode must be one of {EVE_MODES}")
        if not 0.0 <= self.eve_fraction <= 1.0:
            raise ConfigInvalid("eve_fraction must lie in [0, 1]")
        if not 0.0 < self.test_fraction <= 1.0:
            raise ConfigInvalid("test_fraction must lie in (0, 1]")
        if self.n_test is not None and self.n_test < 0:
            raise ConfigInvalid("n_test must be non-negative")
        if self.abort_mismatch_fraction is not None and not 0.0 <= self.abort_mismatch_fraction <= 1.0:
            raise ConfigInvalid("abort_mismatch_fraction must lie in [0, 1]")


def outcome_table(channel: NoiseChannel | None = None) -> np.ndarray:
    """P[prep_basis, prep_bit, meas_basis] = probability of reading bit 0."""
    table = np.empty((2, 2, 2))
    for pb in (0, 1):
        for bit in (0, 1):
            rho = as_density(ENCODING[pb][bit])
            if channel is not None:
                rho = apply_channel(rho, channel, 0)
            for mb in (0, 1):
                v = ENCODING[mb][0]
                table[pb, bit, mb] = float(np.vdot(v, rho.mat @ v).real)
    return np.clip(table, 0.0, 1.0)


def _measure(table, prep_basis, prep_bit, meas_basis, rng) -> np.ndarray:
    p0 = table[prep_basis, prep_bit, meas_basis]
    return (rng.random(prep_bit.size) >= p0).astype(np.int64)


def bb84(cfg: Bb84Config, rng=None) -> KeyReport:
    rng = make_rng(cfg.rng_seed) if rng is None else rng
    n = cfg.n
    a = bits_from(cfg.alice_bits, n, "alice_bits") if cfg.alice_bits else rng.integers(0, 2, n)
    b = bits_from(cfg.alice_bases, n, "alice_bases") if cfg.alice_bases else rng.integers(0, 2, n)
    b_bob = bits_from(cfg.bob_bases, n, "bob_bases") if cfg.bob_bases else rng.integers(0, 2, n)

    clean = outcome_table(None)
    noisy = outcome_table(cfg.channel)
    eve_bits = None
    if cfg.eve_mode == "absent":
        a_bob = _measure(noisy, b, a, b_bob, rng)
    else:
        guess = rng.integers(0, 2, n)
        if cfg.eve_mode == "basis_informed":
            informed = rng.random(n) < cfg.eve_fraction
            e = np.where(informed, b, guess)
        else:
            e = guess
        eve_bits = _measure(clean, b, a, e, rng)
        a_bob = _measure(noisy, e, eve_bits, b_bob, rng)

    kept = np.flatnonzero(b == b_bob)
    n_test = cfg.n_test if cfg.n_test is not None else int(round(cfg.test_fraction * kept.size))
    if n_test > kept.size:
        raise ConfigInvalid(f"asked for {n_test} test bits but only {kept.size} rounds were kept")
    test = np.sort(rng.choice(kept, size=n_test, replace=False)) if n_test else np.empty(0, np.int64)
    mismatches = int((a[test] != a_bob[test]).sum())
    key_idx = np.setdiff1d(kept, test)
    aborted = False
    if cfg.abort_mismatch_fraction is not None and n_test:
        aborted = mismatches / n_test > cfg.abort_mismatch_fraction
    return KeyReport(
        alice_sifted=a[kept],
        bob_sifted=a_bob[kept],
        kept_indices=kept,
        test_indices=test,
        mismatch_count=mismatches,
        detection_flag=mismatches > 0,
        final_key=a[key_idx],
        bob_final_key=a_bob[key_idx],
        aborted=aborted,
        eve_key=None if eve_bits is None else eve_bits[key_idx],
    )


def detection_probability(n_test: int, per_bit: float = 0.25) -> float:
    """Chance that at least one of ``n_test`` compared bits disagrees."""
    return 1.0 - (1.0 - per_bit) ** n_test
