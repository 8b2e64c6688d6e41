"""Integer echo state network used as a memory buffer.

The reservoir state is an integer vector updated as
``x(m) = clip(rot(x(m-1), 1) + H[s(m)], -kappa, kappa)`` where ``H`` holds the
bipolar codes of the ``D`` symbols. A ridge-regression readout per delay ``d``
recovers the symbol presented ``d`` steps earlier.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .hdc import ItemMemory
from .hypervector import Hypervector


class SingularReadoutError(np.linalg.LinAlgError):
    """Normal equations are singular; use a positive ridge parameter."""


def clip(x: np.ndarray, kappa: int) -> np.ndarray:
    return np.clip(x, -kappa, kappa)


@dataclass(frozen=True)
class BufferState:
    values: np.ndarray
    kappa: int

    @classmethod
    def zeros(cls, dim: int, kappa: int) -> BufferState:
        return cls(np.zeros(dim, dtype=np.int16), kappa)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def _as_bipolar(v) -> np.ndarray:
    if isinstance(v, Hypervector):
        return v.bipolar()
    return np.asarray(v)


def buffer_update(state: BufferState, symbol_vector) -> BufferState:
    """Rotate by one, add the bipolar code, clip to ``[-kappa, kappa]``."""
    v = _as_bipolar(symbol_vector)
    if v.shape != state.values.shape:
        raise ValueError(f"dimension mismatch: state {state.dim} vs code {v.shape[0]}")
    new = clip(np.roll(state.values, 1) + v, state.kappa).astype(np.int16)
    return BufferState(new, state.kappa)


def run_buffer(codes: np.ndarray, symbols: Sequence[int], kappa: int,
               start: np.ndarray | None = None) -> np.ndarray:
    """All states for a symbol sequence, shape ``(len(symbols), K)``.

    ``codes`` is the ``(D, K)`` bipolar item memory.
    """
    # narrowest dtype that holds [-kappa, kappa] plus one added code value
    acc = np.int16 if kappa < 2**15 - 1 else np.int64
    codes = np.asarray(codes, dtype=acc)
    k = codes.shape[1]
    x = np.zeros(k, dtype=acc) if start is None else np.asarray(start, dtype=acc).copy()
    out = np.empty((len(symbols), k), dtype=np.int8 if kappa <= 127 else acc)
    for m, s in enumerate(symbols):
        x = np.roll(x, 1)
        x += codes[s]
        np.clip(x, -kappa, kappa, out=x)
        out[m] = x
    return out


@dataclass
class ReadoutMatrix:
    """Per-delay ``(D, K)`` readout weights, frozen after training."""

    weights: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def delays(self) -> tuple[int, ...]:
        return tuple(sorted(self.weights))


def fit_readout(states: np.ndarray, symbols: np.ndarray, n_symbols: int,
                delays: Sequence[int], ridge: float = 1.0) -> ReadoutMatrix:
    """Ridge regression from states onto one-hot targets of the symbol ``d`` steps back."""
    delays = sorted(set(int(d) for d in delays))
    if not delays or delays[0] < 0:
        raise ValueError("delays must be non-negative")
    start = delays[-1]
    X = states[start:].astype(np.float64)
    gram = X.T @ X
    if ridge:
        gram[np.diag_indices_from(gram)] += ridge
    try:
        factor = scipy.linalg.cho_factor(gram, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularReadoutError("normal equations are singular; train with ridge > 0") from exc
    eye = np.eye(n_symbols)
    readout = ReadoutMatrix()
    for d in delays:
        targets = eye[symbols[start - d: len(symbols) - d]]
        readout.weights[d] = scipy.linalg.cho_solve(factor, X.T @ targets, check_finite=False).T
    return readout


def _codes(item_memory) -> np.ndarray:
    if isinstance(item_memory, ItemMemory):
        return item_memory.bipolar()
    return np.asarray(item_memory)


def train_readout(item_memory, delays: Sequence[int], train_len: int = 5000, kappa: int = 3,
                  ridge: float = 1.0, rng: np.random.Generator | None = None) -> ReadoutMatrix:
    """Drive the buffer with a random training sequence and fit one readout per delay."""
    rng = rng if rng is not None else np.random.default_rng()
    codes = _codes(item_memory)
    symbols = rng.integers(0, codes.shape[0], size=train_len)
    states = run_buffer(codes, symbols, kappa)
    return fit_readout(states, symbols, codes.shape[0], delays, ridge)


def recall(state, readout: ReadoutMatrix, d: int) -> int:
    """Symbol with the largest readout response for delay ``d``; ties go to the lowest index."""
    if d not in readout.weights:
        raise KeyError(f"delay {d} was not trained (trained: {readout.delays})")
    x = state.values if isinstance(state, BufferState) else np.asarray(state)
    return int(np.argmax(readout.weights[d] @ x))


def recall_accuracy(item_memory, readout: ReadoutMatrix, test_len: int = 1000, kappa: int = 3,
                    rng: np.random.Generator | None = None,
                    symbols: np.ndarray | None = None) -> dict[int, float]:
    """Accuracy per trained delay on a fresh sequence, scoring steps after the longest delay."""
    rng = rng if rng is not None else np.random.default_rng()
    codes = _codes(item_memory)
    if symbols is None:
        symbols = rng.integers(0, codes.shape[0], size=test_len)
    states = run_buffer(codes, symbols, kappa).astype(np.float64)
    start = max(readout.delays)
    out = {}
    for d, W in readout.weights.items():
        pred = np.argmax(states[start:] @ W.T, axis=1)
        out[d] = float(np.mean(pred == symbols[start - d: len(symbols) - d]))
    return out
