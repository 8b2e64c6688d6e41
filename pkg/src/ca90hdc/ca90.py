"""Rule 90 on a cyclic grid: stepping, seed expansion and period arithmetic.

One step maps a grid ``x`` to ``rot(x, +1) XOR rot(x, -1)``, i.e. every cell
becomes the XOR of its two neighbours, with cell 0 and cell N-1 adjacent.
The map is linear over GF(2), so ``2**j`` steps collapse to
``rot(x, +2**j) XOR rot(x, -2**j)``; arbitrary step counts are evolved by
chaining those leaps over the binary digits of ``t``.

Two representations are provided:

* :class:`GridState` - a single immutable grid backed by a Python ``int``
  (bit ``i`` is cell ``i``), used for the reference operations.
* ``*_words`` functions - the same dynamics on numpy arrays of packed
  ``uint64`` words with shape ``(..., n_words(n))``, used for batches of
  seeds in experiments.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, NamedTuple, Union

import numpy as np
import sympy

from . import bits as _bits
from .hypervector import Hypervector

# ---------------------------------------------------------------------------
# Grid states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridState:
    """A configuration of ``n`` cells on a cyclic grid.

    Attributes:
        n: grid size (>= 3).
        bits: packed cell values, bit ``i`` holding cell ``i``.
    """

    n: int
    bits: int = 0

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"grid size must be >= 3, got {self.n}")
        if self.bits < 0 or self.bits >> self.n:
            raise ValueError(f"bits do not fit in a grid of {self.n} cells")

    @classmethod
    def impulse(cls, n: int, i: int = 0) -> GridState:
        return cls(n, 1 << (i % n))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> GridState:
        return cls(n, _bits.to_int(_bits.random_words((), n, rng)))

    @classmethod
    def from_array(cls, cells) -> GridState:
        cells = np.asarray(cells, dtype=np.uint8).reshape(-1)
        return cls(cells.size, _bits.to_int(_bits.pack(cells)))

    @classmethod
    def from_string(cls, s: str) -> GridState:
        """Parse ``"01001"``; the first character is cell 0."""
        return cls.from_array([int(c) for c in s])

    @classmethod
    def from_words(cls, words: np.ndarray, n: int) -> GridState:
        return cls(n, _bits.to_int(words))

    @property
    def mask(self) -> int:
        return (1 << self.n) - 1

    def to_array(self) -> np.ndarray:
        return _bits.unpack(self.words(), self.n)

    def words(self) -> np.ndarray:
        return _bits.from_int(self.bits, self.n)

    def weight(self) -> int:
        return self.bits.bit_count()

    def active_cells(self) -> list[int]:
        return [i for i in range(self.n) if self.bits >> i & 1]

    def __xor__(self, other: GridState) -> GridState:
        if other.n != self.n:
            raise ValueError(f"grid size mismatch: {self.n} vs {other.n}")
        return GridState(self.n, self.bits ^ other.bits)

    def __str__(self) -> str:
        return "".join("1" if self.bits >> i & 1 else "0" for i in range(self.n))


def rotate_state(state: GridState, r: int) -> GridState:
    """Cyclic shift: cell ``i`` moves to ``i + r``."""
    n = state.n
    r %= n
    if r == 0:
        return state
    x = state.bits
    return GridState(n, ((x << r) | (x >> (n - r))) & state.mask)


def ca90_step(state: GridState) -> GridState:
    return ca90_leap_pow2(state, 0)


def ca90_leap_pow2(state: GridState, j: int) -> GridState:
    """Evolve ``2**j`` steps in one shot."""
    if j < 0:
        raise ValueError("exponent must be >= 0")
    s = pow(2, j, state.n)
    return GridState(state.n, rotate_state(state, s).bits ^ rotate_state(state, -s).bits)


def ca90_evolve(state: GridState, t: int) -> GridState:
    """Evolve ``t`` steps by chaining power-of-two leaps."""
    if t < 0:
        raise ValueError("step count must be >= 0")
    j = 0
    while t:
        if t & 1:
            state = ca90_leap_pow2(state, j)
        t >>= 1
        j += 1
    return state


# ---------------------------------------------------------------------------
# Expansion schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Consecutive:
    """Blocks taken at steps ``1, 2, ..., steps``."""

    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("Consecutive schedule needs at least one step")

    @property
    def blocks(self) -> int:
        return self.steps

    def step_list(self) -> list[int]:
        return list(range(1, self.steps + 1))

    def prefix(self, blocks: int) -> Consecutive:
        return Consecutive(blocks)

    def __str__(self) -> str:
        return f"consecutive:{self.steps}"


@dataclass(frozen=True)
class PowersOfTwo:
    """Blocks taken at steps ``1, 2, 4, ..., 2**max_exponent``."""

    max_exponent: int

    def __post_init__(self):
        if self.max_exponent < 0:
            raise ValueError("max_exponent must be >= 0")

    @property
    def blocks(self) -> int:
        return self.max_exponent + 1

    def step_list(self) -> list[int]:
        return [1 << j for j in range(self.max_exponent + 1)]

    def prefix(self, blocks: int) -> PowersOfTwo:
        return PowersOfTwo(blocks - 1)

    def __str__(self) -> str:
        return f"pow2:{self.max_exponent}"


ExpansionSchedule = Union[Consecutive, PowersOfTwo]


def parse_schedule(text: str) -> ExpansionSchedule:
    """Parse ``"consecutive:L"`` or ``"pow2:J"``."""
    kind, _, value = text.partition(":")
    try:
        v = int(value)
    except ValueError:
        raise ValueError(f"bad schedule {text!r}; expected consecutive:L or pow2:J") from None
    if kind in ("consecutive", "cons"):
        return Consecutive(v)
    if kind in ("pow2", "powers_of_two"):
        return PowersOfTwo(v)
    raise ValueError(f"unknown schedule kind {kind!r}")


def schedule_states(seed: GridState, schedule: ExpansionSchedule) -> Iterator[GridState]:
    """Yield the grid states the schedule contributes, in increasing step order."""
    if isinstance(schedule, Consecutive):
        x = seed
        for _ in range(schedule.steps):
            x = ca90_step(x)
            yield x
    else:
        x = ca90_step(seed)
        yield x
        for j in range(1, schedule.max_exponent + 1):
            x = ca90_leap_pow2(x, j - 1)
            yield x


def expand(seed: GridState, schedule: ExpansionSchedule) -> Hypervector:
    """Concatenate the scheduled states of ``seed`` into a K = N*L hypervector."""
    n = seed.n
    value = 0
    for t, x in enumerate(schedule_states(seed, schedule)):
        value |= x.bits << (t * n)
    return Hypervector.from_int(value, n * schedule.blocks, origin="expanded")


# ---------------------------------------------------------------------------
# Batched packed-word dynamics
# ---------------------------------------------------------------------------


def step_words(x: np.ndarray, n: int) -> np.ndarray:
    return leap_words(x, n, 0)


def leap_words(x: np.ndarray, n: int, j: int) -> np.ndarray:
    s = pow(2, j, n)
    return _bits.rotate(x, s, n) ^ _bits.rotate(x, -s, n)


def evolve_words(x: np.ndarray, n: int, t: int) -> np.ndarray:
    if t < 0:
        raise ValueError("step count must be >= 0")
    x = x.copy()
    j = 0
    while t:
        if t & 1:
            x = leap_words(x, n, j)
        t >>= 1
        j += 1
    return x


def schedule_words(seeds: np.ndarray, n: int, schedule: ExpansionSchedule) -> Iterator[np.ndarray]:
    """Batched :func:`schedule_states`: yields packed states of shape ``seeds.shape``."""
    if isinstance(schedule, Consecutive):
        x = seeds
        for _ in range(schedule.steps):
            x = step_words(x, n)
            yield x
    else:
        x = step_words(seeds, n)
        yield x
        for j in range(1, schedule.max_exponent + 1):
            x = leap_words(x, n, j - 1)
            yield x


def expand_blocks(seeds: np.ndarray, n: int, schedule: ExpansionSchedule) -> np.ndarray:
    """Expanded states as an array of shape ``seeds.shape[:-1] + (L, n_words(n))``."""
    return np.stack(list(schedule_words(seeds, n, schedule)), axis=-2)


def blocks_to_bits(blocks: np.ndarray, n: int) -> np.ndarray:
    """Flatten ``(..., L, W)`` block words into ``(..., L*n)`` unpacked bits."""
    b = _bits.unpack(blocks, n)
    return b.reshape(b.shape[:-2] + (b.shape[-2] * n,))


def expand_words(seeds: np.ndarray, n: int, schedule: ExpansionSchedule) -> np.ndarray:
    """Expanded hypervectors packed contiguously, shape ``(..., n_words(n*L))``."""
    return _bits.pack(blocks_to_bits(expand_blocks(seeds, n, schedule), n))


# ---------------------------------------------------------------------------
# Period arithmetic
# ---------------------------------------------------------------------------


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def _two_adic(n: int) -> tuple[int, int]:
    """Return ``(k, m)`` with ``n = 2**k * m`` and ``m`` odd."""
    k = (n & -n).bit_length() - 1
    return k, n >> k


def sord(n: int) -> int:
    """Multiplicative sub-order of 2 mod ``n``: least j >= 1 with 2**j = +-1 (mod n)."""
    if n < 3 or n % 2 == 0:
        raise ValueError(f"sord is defined here for odd n >= 3, got {n}")
    r = 1
    for j in range(1, n + 1):
        r = 2 * r % n
        if r == 1 or r == n - 1:
            return j
    raise AssertionError("unreachable: 2 is a unit mod odd n")


def periodic_cycle(n: int) -> int:
    """Cycle length of rule 90 on ``n`` cells, with the odd case as an upper bound.

    Powers of two give 1, other even sizes double the half-size value, and odd
    sizes return ``2**sord(n) - 1``, which the true cycle divides (see
    :func:`cycle_period` for the exact value).
    """
    if n < 3:
        raise ValueError("grid size must be >= 3")
    if _is_pow2(n):
        return 1
    if n % 2 == 0:
        return 2 * periodic_cycle(n // 2)
    return (1 << sord(n)) - 1



@lru_cache(maxsize=None)
def cycle_period(n: int) -> int:
    """Exact cycle length of rule 90 on ``n`` cells.

    For odd ``n`` the bound ``2**sord(n) - 1`` is reduced prime by prime while
    the reduced exponent still returns the impulse orbit to itself.
    """
    if n <= 2:
        return 1
    if _is_pow2(n):
        return 1
    if n % 2 == 0:
        return 2 * cycle_period(n // 2)
    x = ca90_step(GridState.impulse(n))
    period = (1 << sord(n)) - 1
    for p in sympy.factorint(period):
        while period % p == 0 and ca90_evolve(x, period // p) == x:
            period //= p
    return period


def transient_length(n: int) -> int:
    """Steps before an impulse enters its cycle: ``2**(k-1)`` for ``n = 2**k * odd``, 1 for odd."""
    k, _ = _two_adic(n)
    return 1 << (k - 1) if k else 1


def randomization_period(n: int) -> int:
    """Number of steps over which expansion keeps adding about ``n`` degrees of freedom.

    * ``n = 2**j``: ``2**(j-2) - 1``.
    * odd ``n``: the exact cycle length (87381 rather than 262143 for n=37).
    * ``n = 2**k * m`` otherwise: the transient plus half the cycle, minus one,
      i.e. ``2**(k-1) + cycle(n/2) - 1``; for ``k = 1`` this is ``cycle(n/2)``.
    """
    if n < 3:
        raise ValueError("grid size must be >= 3")
    if _is_pow2(n):
        if n < 4:
            raise ValueError("power-of-two grid needs n >= 4")
        return (n >> 2) - 1
    if n % 2:
        return cycle_period(n)
    return transient_length(n) + cycle_period(n // 2) - 1


class PeriodReport(NamedTuple):
    n: int
    sord: int | None
    pi_star: int | None
    pi: int
    transient: int
    randomization_period: int


def period_report(n: int) -> PeriodReport:
    odd = n % 2 == 1
    return PeriodReport(
        n=n,
        sord=sord(n) if odd else None,
        pi_star=(1 << sord(n)) - 1 if odd else None,
        pi=cycle_period(n),
        transient=transient_length(n),
        randomization_period=randomization_period(n),
    )


class CycleLength(NamedTuple):
    transient: int
    period: int


class CycleSearchLimit(RuntimeError):
    """Raised when orbit enumeration exceeds its step budget."""


def state_cycle_length(n: int, max_steps: int = 1 << 22, start: GridState | None = None) -> CycleLength:
    """Transient and period of the orbit of ``start`` (default: the impulse) by hashing states."""
    x = start if start is not None else GridState.impulse(n)
    seen: dict[int, int] = {}
    t = 0
    while x.bits not in seen:
        if t > max_steps:
            raise CycleSearchLimit(f"no recurrence within {max_steps} steps for n={n}")
        seen[x.bits] = t
        x = ca90_step(x)
        t += 1
    first = seen[x.bits]
    return CycleLength(first, t - first)
