"""Packed bit-vector helpers.

Vectors of ``n`` bits are stored little-endian in ``uint64`` words: bit ``i``
lives in word ``i // 64`` at position ``i % 64``. Bits above ``n`` in the last
word are always zero; every function here preserves that.
"""
from __future__ import annotations

import numpy as np

WORD = 64
WORD_DTYPE = np.dtype("<u8")


def n_words(n: int) -> int:
    return (n + WORD - 1) // WORD


def tail_mask(n: int) -> np.uint64:
    r = n % WORD
    return np.uint64((1 << r) - 1) if r else np.uint64(0xFFFFFFFFFFFFFFFF)


def pack(bits) -> np.ndarray:
    """Pack a 0/1 array along its last axis into uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8)
    n = bits.shape[-1]
    w = n_words(n)
    pad = w * WORD - n
    if pad:
        widths = [(0, 0)] * (bits.ndim - 1) + [(0, pad)]
        bits = np.pad(bits, widths)
    by = np.packbits(bits, axis=-1, bitorder="little")
    return np.ascontiguousarray(by).view(WORD_DTYPE).reshape(bits.shape[:-1] + (w,))


def unpack(words: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`pack`; returns a uint8 array of 0/1 of last size ``n``."""
    words = np.ascontiguousarray(words, dtype=WORD_DTYPE)
    by = words.view(np.uint8)
    return np.unpackbits(by, axis=-1, count=n, bitorder="little")


def from_int(value: int, n: int) -> np.ndarray:
    if value < 0 or value >> n:
        raise ValueError(f"{value} does not fit in {n} bits")
    w = n_words(n)
    raw = value.to_bytes(w * 8, "little")
    return np.frombuffer(raw, dtype=WORD_DTYPE).copy()


def to_int(words: np.ndarray) -> int:
    return int.from_bytes(np.ascontiguousarray(words, dtype=WORD_DTYPE).tobytes(), "little")


def popcount(words: np.ndarray) -> np.ndarray:
    """Number of set bits summed over the last (word) axis."""
    return np.bitwise_count(words).sum(axis=-1, dtype=np.int64)


def _shl(x: np.ndarray, s: int) -> np.ndarray:
    w = x.shape[-1]
    q, b = divmod(s, WORD)
    y = np.zeros_like(x)
    if q >= w:
        return y
    y[..., q:] = x[..., : w - q] << np.uint64(b)
    if b and q + 1 < w:
        y[..., q + 1:] |= x[..., : w - q - 1] >> np.uint64(WORD - b)
    return y


def _shr(x: np.ndarray, s: int) -> np.ndarray:
    w = x.shape[-1]
    q, b = divmod(s, WORD)
    y = np.zeros_like(x)
    if q >= w:
        return y
    y[..., : w - q] = x[..., q:] >> np.uint64(b)
    if b and q + 1 < w:
        y[..., : w - q - 1] |= x[..., q + 1:] << np.uint64(WORD - b)
    return y


def rotate(x: np.ndarray, r: int, n: int) -> np.ndarray:
    """Cyclic rotation of packed ``n``-bit vectors: output bit ``i`` is input bit ``i - r``."""
    r %= n
    if r == 0:
        return x.copy()
    y = _shl(x, r) | _shr(x, n - r)
    y[..., -1] &= tail_mask(n)
    return y


def random_words(shape, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random packed vectors of ``n`` bits; ``shape`` excludes the word axis."""
    if isinstance(shape, int):
        shape = (shape,)
    w = n_words(n)
    x = rng.integers(0, np.iinfo(np.uint64).max, size=tuple(shape) + (w,), dtype=np.uint64, endpoint=True)
    x[..., -1] &= tail_mask(n)
    return x.astype(WORD_DTYPE, copy=False)
