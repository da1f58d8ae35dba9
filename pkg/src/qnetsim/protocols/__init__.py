"""Protocol machines built on the state and entanglement modules."""
from .bb84 import Bb84Config, bb84, detection_probability
from .chsh_game import STRATEGIES, chsh_game, win_probability
from .e91 import E91Config, E91Result, e91, key_rule
from .keys import KeyReport
from .purify import PurifyResult, bitflip_pair, kept_state, purify, purify_branches, recurrence
from .swap import SwapResult, entanglement_swap, swap_branches
from .teleport import (
    CORRECTIONS,
    TeleportOutcome,
    TeleportSession,
    bob_marginal_before_message,
    correction_for,
    teleport,
)

__all__ = [
    "Bb84Config", "bb84", "detection_probability",
    "STRATEGIES", "chsh_game", "win_probability",
    "E91Config", "E91Result", "e91", "key_rule",
    "KeyReport",
    "PurifyResult", "bitflip_pair", "kept_state", "purify", "purify_branches", "recurrence",
    "SwapResult", "entanglement_swap", "swap_branches",
    "CORRECTIONS", "TeleportOutcome", "TeleportSession", "bob_marginal_before_message",
    "correction_for", "teleport",
]
