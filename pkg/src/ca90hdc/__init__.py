"""Hypervectors expanded from short seeds by cellular automaton rule 90."""
from .ca90 import (
    Consecutive,
    GridState,
    PowersOfTwo,
    ca90_evolve,
    ca90_leap_pow2,
    ca90_step,
    expand,
    period_report,
    randomization_period,
    sord,
)
from .hdc import IID, FlipCount, FlipRate, ItemMemory, Seeds, bind, bundle_majority, dot_bipolar, \
    flip_noise, hamming, make_item_memory, nn_search, permute
from .hypervector import Hypervector

__version__ = "0.1.0"

__all__ = [
    "Consecutive", "GridState", "PowersOfTwo", "ca90_evolve", "ca90_leap_pow2", "ca90_step", "expand",
    "period_report", "randomization_period", "sord", "IID", "FlipCount", "FlipRate", "ItemMemory", "Seeds",
    "bind", "bundle_majority", "dot_bipolar", "flip_noise", "hamming", "make_item_memory", "nn_search",
    "permute", "Hypervector",
]
