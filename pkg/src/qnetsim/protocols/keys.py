"""Key report shared by the QKD protocols."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class KeyReport:
    """Outcome of a key-distribution run.

    Index fields refer to protocol rounds (0-based). ``alice_sifted`` and
    ``bob_sifted`` hold the bits on ``kept_indices``; test rounds are drawn
    from the kept ones and removed from the final key.
    """

    alice_sifted: np.ndarray
    bob_sifted: np.ndarray
    kept_indices: np.ndarray
    test_indices: np.ndarray
    mismatch_count: int
    detection_flag: bool
    final_key: np.ndarray
    bob_final_key: np.ndarray
    aborted: bool = False
    eve_key: np.ndarray | None = None

    @property
    def n_test(self) -> int:
        return int(self.test_indices.size)

    @property
    def test_mismatch_rate(self) -> float:
        return self.mismatch_count / self.n_test if self.n_test else 0.0

    @property
    def key_mismatch_count(self) -> int:
        return int((self.final_key != self.bob_final_key).sum())

    def key_string(self) -> str:
        return "".join(str(int(b)) for b in self.final_key)


def bits_from(value, n: int, name: str) -> np.ndarray:
    """Parse a fixed bit string such as ``"01101"`` into an int array of length n."""
    if isinstance(value, str):
        if set(value) - {"0", "1"}:
            raise ValueError(f"{name} must be a string of 0/1")
        arr = np.array([int(c) for c in value], dtype=np.int64)
    else:
        arr = np.asarray(value, dtype=np.int64)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have length {n}")
    return arr
