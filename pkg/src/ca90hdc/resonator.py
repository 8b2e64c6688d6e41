"""Resonator network factorization of bound hypervectors.

Each factor estimate is updated by unbinding the input with the current
estimates of all other factors, projecting the result onto the span of that
factor's codebook (``H^T H q``) and bipolarizing. All arithmetic runs on the
bipolar view, where binding is element-wise multiplication.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hdc import ItemMemory
from .hypervector import Hypervector


def sign_with_ties(v: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """+1/-1 by sign; exact zeros get a fair coin from ``rng``."""
    out = np.where(v > 0, 1.0, -1.0)
    ties = np.flatnonzero(v == 0)
    if ties.size:
        out[ties] = rng.choice((-1.0, 1.0), size=ties.size)
    return out


def _bipolar_matrix(cb) -> np.ndarray:
    if isinstance(cb, ItemMemory):
        return cb.bipolar().astype(np.float64)
    return np.asarray(cb, dtype=np.float64)


@dataclass
class FactorProblem:
    """A composite vector to factor and the per-factor codebooks.

    ``codebooks`` may be :class:`ItemMemory` objects or ``(M_f, K)`` bipolar
    arrays. ``target`` is the bipolar composite; for an error-free problem it
    is the product of the true rows.
    """

    codebooks: list
    target: np.ndarray
    true_indices: tuple[int, ...] | None = None
    _mats: list[np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        self._mats = [_bipolar_matrix(cb) for cb in self.codebooks]
        if isinstance(self.target, Hypervector):
            self.target = self.target.bipolar()
        self.target = np.asarray(self.target, dtype=np.float64)
        dims = {m.shape[1] for m in self._mats} | {self.target.shape[0]}
        if len(dims) != 1:
            raise ValueError(f"codebooks and target disagree on dimension: {sorted(dims)}")

    @classmethod
    def from_indices(cls, codebooks: Sequence, indices: Sequence[int]) -> FactorProblem:
        mats = [_bipolar_matrix(cb) for cb in codebooks]
        target = np.prod([m[i] for m, i in zip(mats, indices)], axis=0)
        return cls(list(codebooks), target, tuple(int(i) for i in indices))

    @property
    def matrices(self) -> list[np.ndarray]:
        return self._mats

    @property
    def n_factors(self) -> int:
        return len(self._mats)

    @property
    def dim(self) -> int:
        return self.target.shape[0]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(m.shape[0] for m in self._mats)

    @property
    def info_bits(self) -> float:
        return float(sum(math.log2(m) for m in self.sizes))


@dataclass
class ResonatorState:
    estimates: np.ndarray  # (F, K) of +-1
    iteration: int = 0
    converged: bool = False


def init_estimates(problem: FactorProblem, rng: np.random.Generator, mode: str = "superposition") -> ResonatorState:
    """Start every factor at the bipolarized sum of its codebook (or at random with ``mode="random"``)."""
    if mode == "superposition":
        est = [sign_with_ties(m.sum(axis=0), rng) for m in problem.matrices]
    elif mode == "random":
        est = [rng.choice((-1.0, 1.0), size=problem.dim) for _ in problem.matrices]
    else:
        raise ValueError(f"unknown init mode {mode!r}")
    return ResonatorState(np.stack(est))


def resonator_iterate(state: ResonatorState, problem: FactorProblem, rng: np.random.Generator,
                      synchronous: bool = False) -> ResonatorState:
    """One sweep over all factors.

    The default sweep is sequential: factor ``f`` is unbound with the newest
    estimates of the others, including those already updated in this sweep.
    """
    old = state.estimates
    est = old.copy()
    full = problem.target * np.prod(old, axis=0)
    for f, H in enumerate(problem.matrices):
        if synchronous:
            query = full * old[f]
        else:
            query = full * est[f]
        new = sign_with_ties(H.T @ (H @ query), rng)
        if not synchronous:
            full = query * new
        est[f] = new
    return ResonatorState(est, state.iteration + 1, bool(np.array_equal(est, old)))


def decode(state: ResonatorState, problem: FactorProblem) -> tuple[int, ...]:
    """Codebook index with the largest absolute similarity to each estimate.

    Negating an even number of factors leaves the bound product unchanged, so
    an estimate may settle on the negation of its codebook row; magnitude
    decoding reads both polarities. Ties go to the lowest index.
    """
    return tuple(int(np.argmax(np.abs(H @ e))) for H, e in zip(problem.matrices, state.estimates))


@dataclass(frozen=True)
class FactorResult:
    indices: tuple[int, ...]
    iterations: int
    converged: bool

    def correct(self, truth: Sequence[int]) -> bool:
        return tuple(truth) == self.indices


def factorize(problem: FactorProblem, rng: np.random.Generator, max_iter: int = 500,
              init: str = "superposition", synchronous: bool = False) -> FactorResult:
    """Iterate until a sweep leaves every estimate unchanged, or ``max_iter`` sweeps."""
    state = init_estimates(problem, rng, init)
    while state.iteration < max_iter:
        state = resonator_iterate(state, problem, rng, synchronous)
        if state.converged:
            break
    return FactorResult(decode(state, problem), state.iteration, state.converged)


def brute_force_factorize(problem: FactorProblem) -> tuple[int, ...]:
    """Exhaustive search for the index tuple whose bound product best matches the target."""
    best, best_score = None, -math.inf
    for combo in itertools.product(*(range(s) for s in problem.sizes)):
        v = np.prod([m[i] for m, i in zip(problem.matrices, combo)], axis=0)
        score = float(v @ problem.target)
        if score > best_score:
            best, best_score = combo, score
    return tuple(int(i) for i in best)
