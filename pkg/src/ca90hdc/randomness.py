"""Empirical randomness of rule-90 expansion.

Degrees of freedom ``F = p(1-p) / s**2`` are computed from the pairwise
normalized Hamming distances between expansions of independent seeds. The
pairwise distances of the concatenated vectors are accumulated one block at a
time, so a curve over ``L`` steps never holds more than one grid state per
seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import hypergeom

from . import bits as _bits
from . import rng as _rng
from .ca90 import (Consecutive, ExpansionSchedule, GridState, PowersOfTwo, ca90_evolve,
                   schedule_words)
from .parallel import pmap


def degrees_of_freedom(distances: Sequence[float]) -> float:
    """``p(1-p)/s**2`` from a sample of normalized distances; ``inf`` when the sample has no spread."""
    d = np.asarray(distances, dtype=np.float64)
    if d.size < 2:
        raise ValueError("need at least two distances")
    var = d.var(ddof=1)
    p = d.mean()
    if var == 0.0:
        return math.inf
    return float(p * (1.0 - p) / var)


@dataclass
class DofCurve:
    """Degrees of freedom after concatenating ``L = 1..len(steps)`` blocks.

    ``p_h``, ``sigma_h`` and ``F`` are averaged over ``sims`` independent
    simulations. ``extinct_at`` is the first step at which every seed's grid had
    died out (powers of two only); the curve stops just before it.
    """

    n: int
    num_seeds: int
    sims: int
    steps: np.ndarray
    p_h: np.ndarray
    sigma_h: np.ndarray
    F: np.ndarray
    F_std: np.ndarray
    extinct_at: int | None = None

    @property
    def f_over_n(self) -> np.ndarray:
        return self.F / self.n


def _dof_single(args) -> tuple[np.ndarray, np.ndarray, np.ndarray, int | None]:
    n, num_seeds, max_steps, master_seed, sim = args
    gen = _rng.stream(master_seed, "dof", n, num_seeds, sim)
    x = _bits.random_words(num_seeds, n, gen)
    i0, i1 = np.triu_indices(num_seeds, 1)
    acc = np.zeros(i0.size, dtype=np.int64)
    p_h = np.empty(max_steps)
    s_h = np.empty(max_steps)
    F = np.empty(max_steps)
    extinct = None
    for L, x in enumerate(schedule_words(x, n, Consecutive(max_steps)), start=1):
        if not x.any():
            extinct = L
            break
        acc += _bits.popcount(x[i0] ^ x[i1])
        p = acc / (n * L)
        pm = p.mean()
        var = p.var(ddof=1)
        p_h[L - 1] = pm
        s_h[L - 1] = math.sqrt(var)
        F[L - 1] = pm * (1.0 - pm) / var if var > 0 else math.inf
    used = max_steps if extinct is None else extinct - 1
    return p_h[:used], s_h[:used], F[:used], extinct


def dof_curve(n: int, num_seeds: int = 100, max_steps: int = 5000, sims: int = 1,
              master_seed: int = 0, jobs: int = 1) -> DofCurve:
    """Degrees-of-freedom curve of ``num_seeds`` random seeds over ``max_steps`` steps."""
    if num_seeds < 2:
        raise ValueError("need at least two seeds")
    runs = pmap(_dof_single, [(n, num_seeds, max_steps, master_seed, s) for s in range(sims)], jobs)
    used = min(r[0].size for r in runs)
    stack = lambda i: np.stack([r[i][:used] for r in runs])  # noqa: E731
    F = stack(2)
    return DofCurve(
        n=n, num_seeds=num_seeds, sims=sims,
        steps=np.arange(1, used + 1),
        p_h=stack(0).mean(axis=0), sigma_h=stack(1).mean(axis=0),
        F=F.mean(axis=0), F_std=F.std(axis=0),
        extinct_at=runs[0][3],
    )


class EmpiricalPeriod(NamedTuple):
    """Detected randomization period; ``saturated=False`` means "at least ``value``"."""

    value: int
    saturated: bool

    def __str__(self) -> str:
        return str(self.value) if self.saturated else f">={self.value}"


def empirical_randomization_period(curve: DofCurve, window: int = 10) -> EmpiricalPeriod:
    """End of the initial linear-growth run of ``F``.

    The increments ``F(L) - F(L-1)`` sit near ``N`` while the expansion keeps
    adding fresh bits and drop to around zero or below afterwards. The stop is
    the change point maximising the cumulative sum of ``increment - N/2``,
    which one noisy increment cannot move far. The estimate counts as
    saturated when at least ``window`` further steps were observed (any number
    for a curve cut short by extinction).
    """
    inc = np.diff(np.concatenate([[0.0], curve.F]))
    if inc.size == 0:
        return EmpiricalPeriod(0, curve.extinct_at is not None)
    score = np.concatenate([[0.0], np.cumsum(inc - curve.n / 2)])
    L = int(np.argmax(score))
    saturated = inc.size - L >= window or (curve.extinct_at is not None and L < inc.size)
    return EmpiricalPeriod(L, True) if saturated else EmpiricalPeriod(int(inc.size), False)


# ---------------------------------------------------------------------------
# Errors in the seed
# ---------------------------------------------------------------------------


def predicted_ber(p_bf: float) -> float:
    """Error rate at steps ``2**j`` for seed error rate ``p_bf``: ``2 p (1 - p)``."""
    if not 0.0 <= p_bf <= 1.0:
        raise ValueError("error rate must lie in [0, 1]")
    return 2.0 * p_bf * (1.0 - p_bf)


def expected_step_distance(n: int, flips: int, step: int) -> float:
    """Exact mean per-step distance for ``flips`` uniformly placed seed errors.

    Every cell of the error pattern at ``step`` is the parity of the flipped
    cells inside a fixed window whose size is the weight of the evolved
    impulse; the number of flips in it is hypergeometric.
    """
    w = ca90_evolve(GridState.impulse(n), step).weight()
    odd = np.arange(1, min(w, flips) + 1, 2)
    return float(hypergeom.pmf(odd, n, w, flips).sum())


@dataclass
class BerCurve:
    """Per-step distance between the evolutions of a seed and its noisy copy.

    ``steps[0] == 0`` is the seed itself. ``distances`` keeps the per-trial
    values, shape ``(trials, len(steps))``.
    """

    n: int
    flips: int
    steps: np.ndarray
    distances: np.ndarray

    @property
    def p_bf(self) -> float:
        return self.flips / self.n

    @property
    def trials(self) -> int:
        return self.distances.shape[0]

    @property
    def mean(self) -> np.ndarray:
        return self.distances.mean(axis=0)

    @property
    def std(self) -> np.ndarray:
        return self.distances.std(axis=0, ddof=1) if self.trials > 1 else np.zeros(self.steps.size)


def _noisy_pair(n: int, flips: int, gen: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    seed = _bits.random_words((), n, gen)
    err = np.zeros(n, dtype=np.uint8)
    err[gen.choice(n, size=flips, replace=False)] = 1
    return seed, seed ^ _bits.pack(err)


def measured_ber_curve(n: int, flips: int, schedule: ExpansionSchedule = Consecutive(256),
                       trials: int = 500, master_seed: int = 0) -> BerCurve:
    """Evolve random seeds and copies with ``flips`` errors; record per-step distances.

    With a :class:`PowersOfTwo` schedule only the steps ``2**j`` are visited.
    """
    if not 0 <= flips <= n:
        raise ValueError(f"flips must lie in [0, {n}]")
    pairs = [_noisy_pair(n, flips, _rng.stream(master_seed, "ber", n, flips, t)) for t in range(trials)]
    clean = np.stack([p[0] for p in pairs])
    noisy = np.stack([p[1] for p in pairs])
    cols = [_bits.popcount(clean ^ noisy)]
    for a, b in zip(schedule_words(clean, n, schedule), schedule_words(noisy, n, schedule)):
        cols.append(_bits.popcount(a ^ b))
    steps = np.array([0] + schedule.step_list(), dtype=np.int64)
    return BerCurve(n=n, flips=flips, steps=steps, distances=np.stack(cols, axis=1) / n)


def pow2_ber(n: int, flips: int, max_exponent: int = 20, trials: int = 10, master_seed: int = 0) -> float:
    """Measured error rate pooled over the steps ``2**0 .. 2**max_exponent``."""
    curve = measured_ber_curve(n, flips, PowersOfTwo(max_exponent), trials, master_seed)
    return float(curve.distances[:, 1:].mean())
