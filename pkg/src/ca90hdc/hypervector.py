"""Dense binary hypervectors with a bipolar view.

The binary/bipolar correspondence is fixed everywhere in the package as
``b -> 1 - 2b`` (0 -> +1, 1 -> -1), so XOR in the binary view is element-wise
multiplication in the bipolar view.
"""
from __future__ import annotations

import numpy as np

from . import bits as _bits


class Hypervector:
    """Immutable packed binary vector of dimension ``dim``.

    Attributes:
        words: read-only uint64 array holding the packed bits.
        dim: number of bits K.
        origin: free-form provenance tag, ``"iid"`` or ``"expanded"`` in practice.
    """

    __slots__ = ("words", "dim", "origin")

    def __init__(self, words: np.ndarray, dim: int, origin: str = "iid"):
        words = np.array(words, dtype=_bits.WORD_DTYPE, copy=True).reshape(-1)
        if words.shape[0] != _bits.n_words(dim):
            raise ValueError(f"expected {_bits.n_words(dim)} words for dim={dim}, got {words.shape[0]}")
        words[-1] &= _bits.tail_mask(dim)
        words.setflags(write=False)
        self.words = words
        self.dim = dim
        self.origin = origin

    @classmethod
    def from_bits(cls, bits, origin: str = "iid") -> Hypervector:
        bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
        if bits.size and bits.max() > 1:
            raise ValueError("bits must be 0 or 1")
        return cls(_bits.pack(bits), bits.size, origin)

    @classmethod
    def from_bipolar(cls, values, origin: str = "iid") -> Hypervector:
        values = np.asarray(values).reshape(-1)
        if not np.all(np.abs(values) == 1):
            raise ValueError("bipolar entries must be +1 or -1")
        return cls.from_bits((values < 0).astype(np.uint8), origin)

    @classmethod
    def from_int(cls, value: int, dim: int, origin: str = "iid") -> Hypervector:
        return cls(_bits.from_int(value, dim), dim, origin)

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator) -> Hypervector:
        return cls(_bits.random_words((), dim, rng), dim, "iid")

    @classmethod
    def zeros(cls, dim: int) -> Hypervector:
        return cls(np.zeros(_bits.n_words(dim), dtype=_bits.WORD_DTYPE), dim)

    def to_bits(self) -> np.ndarray:
        return _bits.unpack(self.words, self.dim)

    def bipolar(self) -> np.ndarray:
        return (1 - 2 * self.to_bits().astype(np.int8)).astype(np.int8)

    def to_int(self) -> int:
        return _bits.to_int(self.words)

    def weight(self) -> int:
        return int(_bits.popcount(self.words))

    def __len__(self) -> int:
        return self.dim

    def __xor__(self, other: Hypervector) -> Hypervector:
        if not isinstance(other, Hypervector):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return Hypervector(self.words ^ other.words, self.dim, self.origin)

    def __invert__(self) -> Hypervector:
        return Hypervector(~self.words, self.dim, self.origin)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hypervector):
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.dim, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"Hypervector(dim={self.dim}, weight={self.weight()}, origin={self.origin!r})"
