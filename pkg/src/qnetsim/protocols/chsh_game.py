"""The CHSH nonlocal game: referee sends bits x, y; players answer a, b and win
when x AND y equals a XOR b."""
from __future__ import annotations

import numpy as np

from ..entangled import BellLabel, bell_density, joint_outcome_probabilities

STRATEGIES = ("always_zero", "random", "echo_inputs", "quantum")

# shared Phi+ pair; Alice measures Z or X, Bob the two diagonal observables
_QUANTUM_ALICE = ("Z", "X")
_QUANTUM_BOB = ("(Z+X)/sqrt2", "(Z-X)/sqrt2")


def _check(strategy):
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")


def _quantum_answer_table() -> np.ndarray:
    """P[x, y, k] with k indexing (a, b) = (0,0), (0,1), (1,0), (1,1)."""
    rho = bell_density(BellLabel.PhiPlus)
    table = np.empty((2, 2, 4))
    for x in (0, 1):
        for y in (0, 1):
            # outcome +1 reads as bit 0, -1 as bit 1, so (++, +-, -+, --) line up
            table[x, y] = joint_outcome_probabilities(rho, _QUANTUM_ALICE[x], _QUANTUM_BOB[y])
    return table


def win_probability(strategy: str) -> float:
    """Exact per-round winning probability with uniformly random questions."""
    _check(strategy)
    total = 0.0
    for x in (0, 1):
        for y in (0, 1):
            if strategy == "always_zero":
                total += 1.0 if x * y == 0 else 0.0
            elif strategy == "echo_inputs":
                total += 1.0 if x * y == x ^ y else 0.0
            elif strategy == "random":
                total += 0.5
            else:
                p = _quantum_answer_table()[x, y]
                total += p[0] + p[3] if x * y == 0 else p[1] + p[2]
    return total / 4


def play(strategy: str, n_rounds: int, rng) -> float:
    """Sample ``n_rounds`` rounds and return the observed win rate."""
    _check(strategy)
    if n_rounds < 1:
        raise ValueError("n_rounds must be at least 1")
    x = rng.integers(0, 2, n_rounds)
    y = rng.integers(0, 2, n_rounds)
    if strategy == "always_zero":
        a = b = np.zeros(n_rounds, dtype=int)
    elif strategy == "echo_inputs":
        a, b = x, y
    elif strategy == "random":
        a = rng.integers(0, 2, n_rounds)
        b = rng.integers(0, 2, n_rounds)
    else:
        cum = np.cumsum(_quantum_answer_table(), axis=2)
        u = rng.random(n_rounds)
        k = (u[:, None] >= cum[x, y][:, :3]).sum(axis=1)
        a, b = k >> 1, k & 1
    wins = (x & y) == (a ^ b)
    return float(wins.mean())


def chsh_game(strategy: str, n_rounds: int | None = None, rng=None) -> float:
    """Win rate: exact when ``rng`` is None, otherwise sampled over ``n_rounds``."""
    if rng is None:
        return win_probability(strategy)
    return play(strategy, n_rounds, rng)
