import numpy as np
import pytest

from qnetsim.errors import ConfigInvalid
from qnetsim.rng import SEED_ENV_VAR, make_rng, resolve_seed, spawn


def test_same_seed_same_stream():
    assert np.array_equal(make_rng(7).random(16), make_rng(7).random(16))
    assert not np.array_equal(make_rng(7).random(16), make_rng(8).random(16))


def test_generator_passes_through():
    g = np.random.default_rng(1)
    assert make_rng(g) is g


def test_seed_range_checked():
    make_rng(2**64 - 1)
    with pytest.raises(ConfigInvalid):
        make_rng(-1)
    with pytest.raises(ConfigInvalid):
        make_rng(2**64)


def test_resolve_seed_precedence(monkeypatch):
    monkeypatch.setenv(SEED_ENV_VAR, "13")
    assert resolve_seed(4) == 4
    assert resolve_seed() == 13
    monkeypatch.delenv(SEED_ENV_VAR)
    assert resolve_seed() == 0


def test_spawned_children_are_independent_and_reproducible():
    a = [c.random(4) for c in spawn(make_rng(3), 3)]
    b = [c.random(4) for c in spawn(make_rng(3), 3)]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not np.array_equal(a[0], a[1])
