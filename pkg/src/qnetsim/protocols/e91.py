"""Entanglement-based key distribution with a built-in CHSH test.

Alice picks among Z, X and (Z+X)/sqrt2; Bob among Z, (Z-X)/sqrt2 and
(Z+X)/sqrt2. Two of the nine setting pairs feed the key, four feed the CHSH
estimate and the remaining three are discarded.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..channels import NoiseChannel, apply_channel
from ..entangled import (
    BellLabel,
    bell_density,
    bell_label,
    chsh_from_counts,
    correlator,
    joint_outcome_probabilities,
)
from ..errors import ConfigInvalid
from ..rng import make_rng
from .keys import KeyReport

ALICE_SETTINGS = ("Z", "X", "(Z+X)/sqrt2")
BOB_SETTINGS = ("Z", "(Z-X)/sqrt2", "(Z+X)/sqrt2")

KEY_PAIRS = ((0, 0), (2, 2))
# ordered as the four CHSH terms; the last one enters with a minus sign
CHSH_PAIRS = ((0, 1), (0, 2), (1, 1), (1, 2))
DISCARD_PAIRS = ((1, 0), (2, 0), (2, 1))


@dataclass(frozen=True)
class E91Config:
    n_rounds: int
    rng_seed: int = 0
    source: str = "PsiPlus"
    channel: NoiseChannel | None = None

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ConfigInvalid("n_rounds must be at least 1")
        bell_label(self.source)

    def source_state(self):
        rho = bell_density(self.source)
        if self.channel is not None:
            rho = apply_channel(rho, self.channel, 1)
        return rho


@dataclass(frozen=True, eq=False)
class E91Result:
    key_report: KeyReport
    chsh: float
    round_classes: dict
    chsh_counts: np.ndarray = field(repr=False)


def key_rule(source: str = "PsiPlus") -> dict:
    """For each key setting pair: 'keep', 'flip' (Bob inverts) or 'drop'.

    Decided from the correlator on the nominal noiseless source: +1 keeps,
    -1 flips, anything short of perfect correlation is dropped.
    """
    rho = bell_density(source)
    rule = {}
    for i, j in KEY_PAIRS:
        c = correlator(rho, ALICE_SETTINGS[i], BOB_SETTINGS[j])
        rule[(i, j)] = "keep" if c > 1 - 1e-9 else "flip" if c < -1 + 1e-9 else "drop"
    return rule


def e91(cfg: E91Config, rng=None) -> E91Result:
    rng = make_rng(cfg.rng_seed) if rng is None else rng
    n = cfg.n_rounds
    rho = cfg.source_state()
    cum = np.empty((3, 3, 4))
    for i in range(3):
        for j in range(3):
            cum[i, j] = np.cumsum(joint_outcome_probabilities(rho, ALICE_SETTINGS[i], BOB_SETTINGS[j]))
    ai = rng.integers(0, 3, n)
    bj = rng.integers(0, 3, n)
    u = rng.random(n)
    k = (u[:, None] >= cum[ai, bj][:, :3]).sum(axis=1)
    alice, bob = k >> 1, k & 1

    classes = np.full(n, "discard", dtype=object)
    counts = np.zeros((4, 4), dtype=np.int64)
    for row, (i, j) in enumerate(CHSH_PAIRS):
        sel = (ai == i) & (bj == j)
        classes[sel] = "chsh"
        counts[row] = np.bincount(k[sel], minlength=4)
    rule = key_rule(cfg.source)
    usable = np.zeros(n, dtype=bool)
    bob_key = bob.copy()
    for (i, j), action in rule.items():
        sel = (ai == i) & (bj == j)
        classes[sel] = "key"
        if action == "flip":
            bob_key[sel] ^= 1
        if action != "drop":
            usable |= sel

    kept = np.flatnonzero(usable)
    test = np.flatnonzero(classes == "chsh")
    s = chsh_from_counts(counts) if (counts.sum(axis=1) > 0).all() else float("nan")
    mismatches = int((alice[kept] != bob_key[kept]).sum())
    report = KeyReport(
        alice_sifted=alice[kept],
        bob_sifted=bob_key[kept],
        kept_indices=kept,
        test_indices=test,
        mismatch_count=mismatches,
        detection_flag=not s > 2.0,
        final_key=alice[kept],
        bob_final_key=bob_key[kept],
    )
    round_classes = {c: int((classes == c).sum()) for c in ("key", "chsh", "discard")}
    return E91Result(report, s, round_classes, counts)
