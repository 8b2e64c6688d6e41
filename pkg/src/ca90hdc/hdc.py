"""Binary VSA operations and item memories.

Item memories come in two flavours. A materialized memory keeps the full
``D x K`` bit matrix. A seed-based memory keeps only ``D`` short seeds and an
expansion schedule; its rows are regenerated on demand, and nearest-neighbour
search streams over the expansion one block at a time so memory stays at
``O(N * D)`` words.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np

from . import bits as _bits
from .ca90 import ExpansionSchedule, GridState, expand_words, schedule_words
from .hypervector import Hypervector


def _check_dims(a: Hypervector, b: Hypervector) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def bind(a: Hypervector, b: Hypervector) -> Hypervector:
    """Element-wise XOR."""
    _check_dims(a, b)
    return a ^ b


def permute(a: Hypervector, i: int) -> Hypervector:
    """Cyclic rotation by ``i`` positions (element ``k`` moves to ``k + i``)."""
    return Hypervector(_bits.rotate(a.words, i, a.dim), a.dim, a.origin)


def bundle_majority(vs: Sequence[Hypervector], rng: np.random.Generator) -> Hypervector:
    """Majority rule per position; exact ties are settled by a fair coin from ``rng``."""
    if len(vs) == 0:
        raise ValueError("cannot bundle an empty list")
    dim = vs[0].dim
    for v in vs[1:]:
        if v.dim != dim:
            raise ValueError(f"dimension mismatch: {dim} vs {v.dim}")
    counts = np.sum([v.to_bits() for v in vs], axis=0, dtype=np.int64)
    twice = 2 * counts
    out = (twice > len(vs)).astype(np.uint8)
    ties = np.flatnonzero(twice == len(vs))
    if ties.size:
        out[ties] = rng.integers(0, 2, size=ties.size, dtype=np.uint8)
    return Hypervector.from_bits(out)


def hamming(a: Hypervector, b: Hypervector) -> float:
    """Normalized Hamming distance in [0, 1]."""
    _check_dims(a, b)
    return int(_bits.popcount(a.words ^ b.words)) / a.dim


def dot_bipolar(a: Hypervector, b: Hypervector) -> int:
    """Dot product of the bipolar views, computed as ``K - 2 * popcount(a ^ b)``."""
    _check_dims(a, b)
    return a.dim - 2 * int(_bits.popcount(a.words ^ b.words))


# ---------------------------------------------------------------------------
# Noise
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlipCount:
    """Flip exactly ``k`` distinct positions."""

    k: int

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("flip count must be >= 0")


@dataclass(frozen=True)
class FlipRate:
    """Flip every position independently with probability ``p``."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("flip rate must lie in [0, 1]")


NoiseSpec = Union[FlipCount, FlipRate]


def flip_mask(dim: int, spec: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Unpacked 0/1 error pattern of length ``dim`` for ``spec``."""
    mask = np.zeros(dim, dtype=np.uint8)
    if isinstance(spec, FlipCount):
        if spec.k > dim:
            raise ValueError(f"cannot flip {spec.k} of {dim} positions")
        mask[rng.choice(dim, size=spec.k, replace=False)] = 1
    else:
        mask[rng.random(dim) < spec.p] = 1
    return mask


def flip_noise(v: Hypervector, spec: NoiseSpec, rng: np.random.Generator) -> Hypervector:
    return Hypervector(v.words ^ _bits.pack(flip_mask(v.dim, spec, rng)), v.dim, v.origin)


# ---------------------------------------------------------------------------
# Item memories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IID:
    """Source of unbiased i.i.d. random rows of dimension ``dim``."""

    dim: int


@dataclass(frozen=True)
class Seeds:
    """Source of rows expanded from random ``n``-cell seeds."""

    n: int
    schedule: ExpansionSchedule


class ItemMemory:
    """``D`` code vectors of a common dimension ``K``.

    Build one with :func:`make_item_memory`, :meth:`from_rows` or
    :meth:`from_seeds`. Instances are not mutated after construction.
    """

    def __init__(self, *, rows: np.ndarray | None = None, dim: int | None = None,
                 seeds: np.ndarray | None = None, n: int | None = None,
                 schedule: ExpansionSchedule | None = None):
        if (rows is None) == (seeds is None):
            raise ValueError("give either materialized rows or seeds, not both")
        if rows is not None:
            rows = np.array(rows, dtype=_bits.WORD_DTYPE)
            if rows.ndim != 2 or rows.shape[1] != _bits.n_words(dim):
                raise ValueError("rows must have shape (D, n_words(dim))")
            rows.setflags(write=False)
            self._rows, self._dim = rows, dim
            self._seeds = self._n = self._schedule = None
        else:
            seeds = np.array(seeds, dtype=_bits.WORD_DTYPE)
            if seeds.ndim != 2 or seeds.shape[1] != _bits.n_words(n):
                raise ValueError("seeds must have shape (D, n_words(n))")
            seeds.setflags(write=False)
            self._seeds, self._n, self._schedule = seeds, n, schedule
            self._dim = n * schedule.blocks
            self._rows = None

    @classmethod
    def from_rows(cls, rows: Sequence[Hypervector]) -> ItemMemory:
        dims = {r.dim for r in rows}
        if len(dims) != 1:
            raise ValueError("all rows must share one dimension")
        return cls(rows=np.stack([r.words for r in rows]), dim=dims.pop())

    @classmethod
    def from_seeds(cls, seeds: Sequence[GridState], schedule: ExpansionSchedule) -> ItemMemory:
        ns = {s.n for s in seeds}
        if len(ns) != 1:
            raise ValueError("all seeds must share one grid size")
        n = ns.pop()
        return cls(seeds=np.stack([s.words() for s in seeds]), n=n, schedule=schedule)

    @property
    def size(self) -> int:
        return (self._rows if self._rows is not None else self._seeds).shape[0]

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def seed_based(self) -> bool:
        return self._seeds is not None

    @property
    def n(self) -> int | None:
        return self._n

    @property
    def schedule(self) -> ExpansionSchedule | None:
        return self._schedule

    @property
    def seeds(self) -> np.ndarray | None:
        return self._seeds

    def __len__(self) -> int:
        return self.size

    def materialize(self) -> np.ndarray:
        """Packed ``(D, n_words(K))`` matrix; regenerated from seeds for seed-based memories."""
        if self._rows is not None:
            return self._rows
        return expand_words(self._seeds, self._n, self._schedule)

    def to_materialized(self) -> ItemMemory:
        return ItemMemory(rows=self.materialize(), dim=self._dim)

    def row(self, i: int) -> Hypervector:
        if self._rows is not None:
            return Hypervector(self._rows[i], self._dim)
        words = expand_words(self._seeds[i], self._n, self._schedule)
        return Hypervector(words, self._dim, origin="expanded")

    def bits(self) -> np.ndarray:
        return _bits.unpack(self.materialize(), self._dim)

    def bipolar(self) -> np.ndarray:
        return (1 - 2 * self.bits().astype(np.int8)).astype(np.int8)

    def iter_blocks(self) -> Iterator[np.ndarray]:
        """Seed-based only: the ``(D, n_words(N))`` states contributing each block."""
        if self._seeds is None:
            raise TypeError("block streaming needs a seed-based memory")
        return schedule_words(self._seeds, self._n, self._schedule)


def make_item_memory(d: int, source: IID | Seeds, rng: np.random.Generator) -> ItemMemory:
    if d < 1:
        raise ValueError("item memory needs at least one row")
    if isinstance(source, IID):
        return ItemMemory(rows=_bits.random_words(d, source.dim, rng), dim=source.dim)
    return ItemMemory(seeds=_bits.random_words(d, source.n, rng), n=source.n, schedule=source.schedule)


def _query_blocks(q: Hypervector, n: int, blocks: int) -> np.ndarray:
    return _bits.pack(q.to_bits().reshape(blocks, n))


def distances(mem: ItemMemory, q: Hypervector) -> np.ndarray:
    """Unnormalized Hamming distance from ``q`` to every row.

    Seed-based memories are scanned block by block without materializing rows.
    """
    if q.dim != mem.dim:
        raise ValueError(f"query dimension {q.dim} does not match memory dimension {mem.dim}")
    if not mem.seed_based:
        return _bits.popcount(mem.materialize() ^ q.words)
    qb = _query_blocks(q, mem.n, mem.schedule.blocks)
    acc = np.zeros(mem.size, dtype=np.int64)
    for t, states in enumerate(mem.iter_blocks()):
        acc += _bits.popcount(states ^ qb[t])
    return acc


def nn_search(mem: ItemMemory, q: Hypervector) -> tuple[int, float]:
    """Index of the nearest row and its normalized distance; ties go to the lowest index."""
    if mem.size == 0:
        raise ValueError("empty item memory")
    d = distances(mem, q)
    i = int(np.argmin(d))
    return i, float(d[i]) / mem.dim


def hamming_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise unnormalized distances between packed rows ``a`` (P, W) and ``b`` (Q, W)."""
    a, b = np.asarray(a), np.asarray(b)
    out = np.empty((a.shape[0], b.shape[0]), dtype=np.int64)
    step = max(1, (1 << 18) // max(1, b.size))  # bound the broadcast temporary
    for i in range(0, a.shape[0], step):
        out[i:i + step] = _bits.popcount(a[i:i + step, None, :] ^ b[None, :, :])
    return out
