"""Experiment drivers.

Every driver returns a :class:`Table`: a header plus rows sorted by their
parameter columns. Trials draw from streams keyed by
``(master_seed, experiment, parameters..., trial)``, so results do not depend
on how trials are spread over worker processes.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import bits as _bits
from . import rng as _rng
from .buffer import fit_readout, recall_accuracy, run_buffer
from .ca90 import (
    Consecutive,
    ExpansionSchedule,
    GridState,
    PowersOfTwo,
    blocks_to_bits,
    ca90_evolve,
    ca90_leap_pow2,
    ca90_step,
    expand,
    expand_blocks,
    period_report,
    rotate_state,
)
from .hdc import Seeds, hamming_matrix, make_item_memory, nn_search
from .parallel import pmap
from .randomness import dof_curve, empirical_randomization_period, expected_step_distance, \
    measured_ber_curve, predicted_ber
from .resonator import FactorProblem, factorize


@dataclass
class Table:
    """Result rows for one experiment; ``summary`` holds scalars for the metadata sidecar."""

    name: str
    columns: list[str]
    rows: list[tuple]
    summary: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def where(self, **eq) -> list[dict]:
        out = []
        for r in self.rows:
            d = dict(zip(self.columns, r))
            if all(d[k] == v for k, v in eq.items()):
                out.append(d)
        return out


def _bipolar(b: np.ndarray) -> np.ndarray:
    return 1.0 - 2.0 * b.astype(np.float64)


def _mean_std(values) -> tuple[float, float]:
    a = np.asarray(values, dtype=np.float64)
    return float(a.mean()), float(a.std(ddof=1)) if a.size > 1 else 0.0


def _aggregate(results: list[list[tuple]], nkeys: int) -> dict[tuple, list[list[float]]]:
    """Group per-trial tuples ``key... , metric...`` by key."""
    groups: dict[tuple, list[list[float]]] = defaultdict(list)
    for trial in results:
        for rec in trial:
            groups[tuple(rec[:nkeys])].append(list(rec[nkeys:]))
    return groups


# ---------------------------------------------------------------------------
# Periods and degrees of freedom
# ---------------------------------------------------------------------------


def period_experiment(ns: Sequence[int], empirical: bool = False, num_seeds: int = 100,
                      max_steps: int = 5000, sims: int = 10, master_seed: int = 0,
                      jobs: int = 1) -> Table:
    """Analytic period table; with ``empirical`` also the DOF growth-stop estimate."""
    cols = ["n", "sord", "pi_star", "pi", "transient", "randomization_period"]
    if empirical:
        cols += ["empirical_period", "empirical_saturated"]
    rows = []
    for n in sorted(set(ns)):
        rep = period_report(n)
        row = (rep.n, rep.sord if rep.sord is not None else "", rep.pi_star if rep.pi_star is not None else "",
               rep.pi, rep.transient, rep.randomization_period)
        if empirical:
            steps = min(max_steps, rep.randomization_period + 200)
            est = empirical_randomization_period(dof_curve(n, num_seeds, steps, sims, master_seed, jobs))
            row += (est.value, int(est.saturated))
        rows.append(row)
    return Table("period", cols, rows)


def dof_experiment(ns: Sequence[int], num_seeds: int = 100, max_steps: int = 5000, sims: int = 1,
                   master_seed: int = 0, jobs: int = 1) -> Table:
    cols = ["n", "step", "K", "F", "F_std", "F_over_n", "p_h", "sigma_h", "sims"]
    rows, summary = [], {}
    for n in sorted(set(ns)):
        c = dof_curve(n, num_seeds, max_steps, sims, master_seed, jobs)
        fn = c.f_over_n
        for i, L in enumerate(c.steps):
            rows.append((n, int(L), n * int(L), float(c.F[i]), float(c.F_std[i]), float(fn[i]),
                         float(c.p_h[i]), float(c.sigma_h[i]), sims))
        est = empirical_randomization_period(c)
        summary[str(n)] = {"empirical_period": est.value, "saturated": est.saturated,
                           "extinct_at": c.extinct_at}
    return Table("dof", cols, rows, summary)


def ber_experiment(n: int, flips: Sequence[int], schedule: ExpansionSchedule = Consecutive(256),
                   trials: int = 500, master_seed: int = 0) -> Table:
    """Per-step distance between clean and noisy seeds, with both predictions alongside."""
    cols = ["n", "flips", "p_bf", "step", "mean", "std", "expected", "predicted_pow2", "trials"]
    rows = []
    for k in sorted(set(flips)):
        c = measured_ber_curve(n, k, schedule, trials, master_seed)
        mean, std = c.mean, c.std
        for i, t in enumerate(c.steps):
            t = int(t)
            exp = k / n if t == 0 else expected_step_distance(n, k, t)
            rows.append((n, k, k / n, t, float(mean[i]), float(std[i]), exp, predicted_ber(k / n), trials))
    return Table("ber", cols, rows)


# ---------------------------------------------------------------------------
# Item memory
# ---------------------------------------------------------------------------


def _flip_masks(shape: tuple[int, int], k: int, gen: np.random.Generator) -> np.ndarray:
    """One row per query with exactly ``k`` distinct flipped positions."""
    rows, dim = shape
    mask = np.zeros(shape, dtype=np.uint8)
    if k:
        pos = np.argpartition(gen.random(shape), k - 1, axis=1)[:, :k]
        mask[np.arange(rows)[:, None], pos] = 1
    return mask


def _item_memory_trial(args) -> list[tuple]:
    n, d, bers, steps, master_seed, trial = args
    gen = _rng.stream(master_seed, "item-memory", n, d, trial)
    lmax = max(steps)
    seeds = _bits.random_words(d, n, gen)
    mems = {
        "ca90": blocks_to_bits(expand_blocks(seeds, n, Consecutive(lmax)), n),
        "iid": gen.integers(0, 2, size=(d, n * lmax), dtype=np.uint8),
    }
    out = []
    for ber in bers:
        for L in steps:
            k_dim = n * L
            # both memories see the same flip positions so their gap is a paired estimate
            mask = _flip_masks((d, k_dim), int(round(ber * k_dim)), gen)
            for kind, mem in mems.items():
                rows = _bits.pack(mem[:, :k_dim])
                queries = _bits.pack(mem[:, :k_dim] ^ mask)
                hits = np.argmin(hamming_matrix(queries, rows), axis=1) == np.arange(d)
                out.append((kind, ber, L, float(hits.mean())))
    return out


def item_memory_experiment(n: int = 23, d: int = 100, bers: Sequence[float] = (0.30, 0.35, 0.40),
                           steps: Sequence[int] = (1, 2, 4, 8, 16, 32, 64, 128), trials: int = 1000,
                           master_seed: int = 0, jobs: int = 1) -> Table:
    """Nearest-neighbour accuracy with noisy queries, expanded vs i.i.d. memories.

    Each trial draws fresh memories and uses every stored row once as a query,
    with exactly ``round(ber * K)`` flipped bits.
    """
    steps = sorted(set(steps))
    bers = sorted(set(bers))
    res = pmap(_item_memory_trial, [(n, d, bers, steps, master_seed, t) for t in range(trials)], jobs)
    cols = ["memory", "n", "d", "ber", "steps", "K", "accuracy", "accuracy_std", "trials"]
    rows = []
    for (kind, ber, L), vals in sorted(_aggregate(res, 3).items()):
        m, s = _mean_std([v[0] for v in vals])
        rows.append((kind, n, d, ber, L, n * L, m, s, len(vals)))
    return Table("item-memory", cols, rows)


# ---------------------------------------------------------------------------
# Memory buffer
# ---------------------------------------------------------------------------


def _buffer_trial(args) -> list[tuple]:
    n, d, steps, delays, kappa, train_len, test_len, ridge, master_seed, trial = args
    gen = _rng.stream(master_seed, "buffer", n, d, trial)
    lmax = max(steps)
    seeds = _bits.random_words(d, n, gen)
    mems = {
        "ca90": _bipolar(blocks_to_bits(expand_blocks(seeds, n, Consecutive(lmax)), n)),
        "iid": _bipolar(gen.integers(0, 2, size=(d, n * lmax), dtype=np.uint8)),
    }
    train = gen.integers(0, d, size=train_len)
    test = gen.integers(0, d, size=test_len)
    out = []
    for kind, mem in mems.items():
        for L in steps:
            codes = mem[:, :n * L]
            readout = fit_readout(run_buffer(codes, train, kappa), train, d, delays, ridge)
            acc = recall_accuracy(codes, readout, kappa=kappa, symbols=test)
            out += [(kind, L, dl, acc[dl]) for dl in delays]
    return out


def buffer_experiment(n: int = 37, d: int = 27, steps: Sequence[int] = (1, 2, 4, 8, 16, 24),
                      delays: Sequence[int] = (5, 10, 15), trials: int = 10, kappa: int = 3,
                      train_len: int = 5000, test_len: int = 1000, ridge: float = 1.0,
                      master_seed: int = 0, jobs: int = 1) -> Table:
    """Delayed-recall accuracy of the integer echo state buffer, expanded vs i.i.d. codes."""
    steps = sorted(set(steps))
    delays = sorted(set(delays))
    args = [(n, d, steps, delays, kappa, train_len, test_len, ridge, master_seed, t) for t in range(trials)]
    res = pmap(_buffer_trial, args, jobs)
    cols = ["memory", "n", "d", "steps", "K", "delay", "kappa", "accuracy", "accuracy_std", "trials"]
    rows = []
    for (kind, L, dl), vals in sorted(_aggregate(res, 3).items()):
        m, s = _mean_std([v[0] for v in vals])
        rows.append((kind, n, d, L, n * L, dl, kappa, m, s, len(vals)))
    return Table("buffer", cols, rows)


# ---------------------------------------------------------------------------
# Resonator network
# ---------------------------------------------------------------------------


def _resonator_trial(args) -> list[tuple]:
    n, m, f, steps, max_iter, master_seed, trial = args
    gen = _rng.stream(master_seed, "resonator", n, m, f, trial)
    lmax = max(steps)
    seeds = _bits.random_words((f, m), n, gen)
    idx = gen.integers(0, m, size=f)
    books = {
        "ca90": _bipolar(blocks_to_bits(expand_blocks(seeds, n, Consecutive(lmax)), n)),
        "iid": _bipolar(gen.integers(0, 2, size=(f, m, n * lmax), dtype=np.uint8)),
    }
    out = []
    for kind, cb in books.items():
        for L in steps:
            prob = FactorProblem.from_indices([cb[i, :, :n * L] for i in range(f)], idx)
            res = factorize(prob, _rng.stream(master_seed, "resonator-run", n, m, f, trial, kind, L), max_iter)
            out.append((kind, L, float(res.correct(idx)), float(res.iterations)))
    return out


def resonator_experiment(ns: Sequence[int] = (100, 200, 300), ms: Sequence[int] = (8, 16, 32),
                         factors: int = 4, steps: Sequence[int] = tuple(range(1, 101)),
                         trials: int = 100, max_iter: int = 500, master_seed: int = 0,
                         jobs: int = 1) -> Table:
    """Error-free factorization accuracy and iterations vs consecutive expansion steps."""
    steps = sorted(set(steps))
    cols = ["memory", "n", "m", "factors", "steps", "K", "accuracy", "accuracy_std",
            "iterations", "iterations_std", "trials"]
    rows = []
    for n in sorted(set(ns)):
        for m in sorted(set(ms)):
            args = [(n, m, factors, steps, max_iter, master_seed, t) for t in range(trials)]
            for (kind, L), vals in sorted(_aggregate(pmap(_resonator_trial, args, jobs), 2).items()):
                acc, acc_s = _mean_std([v[0] for v in vals])
                it, it_s = _mean_std([v[1] for v in vals])
                rows.append((kind, n, m, factors, L, n * L, acc, acc_s, it, it_s, len(vals)))
    rows.sort()
    return Table("resonator", cols, rows)


def info_matched_size(factors: int, info_bits: float) -> int:
    """Codebook size giving about ``info_bits`` bits over ``factors`` factors (16 bits: 4x16, 3x40)."""
    return max(1, int(round(2.0 ** (info_bits / factors))))


def _noisy_resonator_trial(args) -> list[tuple]:
    n, f, m, flips, exps, max_iter, master_seed, trial = args
    gen = _rng.stream(master_seed, "resonator-noise", n, f, m, trial)
    jmax = max(exps)
    sched = PowersOfTwo(jmax)
    seeds = _bits.random_words((f, m), n, gen)
    idx = gen.integers(0, m, size=f)
    composite = np.bitwise_xor.reduce(seeds[np.arange(f), idx], axis=0)
    # nested flip sets: k flips are the first k positions of one permutation
    order = gen.permutation(n)
    noisy = []
    for k in flips:
        mask = np.zeros(n, dtype=np.uint8)
        mask[order[:k]] = 1
        noisy.append(composite ^ _bits.pack(mask))
    books = _bipolar(blocks_to_bits(expand_blocks(seeds, n, sched), n))
    targets = _bipolar(blocks_to_bits(expand_blocks(np.stack(noisy), n, sched), n))
    out = []
    for fi, k in enumerate(flips):
        for j in exps:
            K = n * (j + 1)
            prob = FactorProblem([books[i, :, :K] for i in range(f)], targets[fi, :K], tuple(int(i) for i in idx))
            res = factorize(prob, _rng.stream(master_seed, "resonator-noise-run", n, f, m, trial, k, j), max_iter)
            out.append((k, j, float(res.correct(idx)), float(res.iterations)))
    return out


def noisy_resonator_experiment(ns: Sequence[int] = (37, 39), flips: Sequence[int] = range(6),
                               factors: Sequence[int] = (3, 4), info_bits: Sequence[float] = (16.0,),
                               exponents: Sequence[int] = tuple(range(21)), trials: int = 100,
                               max_iter: int = 500, master_seed: int = 0, jobs: int = 1) -> Table:
    """Factorization of a pow2-expanded composite whose seed carries bit flips.

    Codebooks are expanded from clean seeds; only the composite's seed is noisy.
    ``exponents`` lists the largest power ``j`` used, so ``K = N (j + 1)``.
    """
    flips = sorted(set(flips))
    exps = sorted(set(exponents))
    cols = ["n", "factors", "m", "info_bits", "flips", "ber", "exponent", "K", "accuracy", "accuracy_std",
            "iterations", "iterations_std", "trials"]
    rows = []
    for n in sorted(set(ns)):
        if max(flips) > n:
            raise ValueError(f"cannot flip {max(flips)} bits of a {n}-cell seed")
        for bits_ in sorted(set(info_bits)):
            for f in sorted(set(factors)):
                m = info_matched_size(f, bits_)
                args = [(n, f, m, flips, exps, max_iter, master_seed, t) for t in range(trials)]
                for (k, j), vals in sorted(_aggregate(pmap(_noisy_resonator_trial, args, jobs), 2).items()):
                    acc, acc_s = _mean_std([v[0] for v in vals])
                    it, it_s = _mean_std([v[1] for v in vals])
                    rows.append((n, f, m, round(f * math.log2(m), 2), k, k / n, j, n * (j + 1),
                                 acc, acc_s, it, it_s, len(vals)))
    rows.sort()
    return Table("resonator-noise", cols, rows)


# ---------------------------------------------------------------------------
# Self test
# ---------------------------------------------------------------------------


def _check_linearity(gen):
    n = int(gen.integers(3, 80))
    a, b = GridState.random(n, gen), GridState.random(n, gen)
    return ca90_step(a ^ b) == ca90_step(a) ^ ca90_step(b)


def _check_shift(gen):
    n = int(gen.integers(3, 80))
    a, r = GridState.random(n, gen), int(gen.integers(-n, n))
    return ca90_step(rotate_state(a, r)) == rotate_state(ca90_step(a), r)


def _check_leap(gen):
    n, j = int(gen.integers(3, 60)), int(gen.integers(0, 8))
    a = GridState.random(n, gen)
    x = a
    for _ in range(1 << j):
        x = ca90_step(x)
    return ca90_leap_pow2(a, j) == x == ca90_evolve(a, 1 << j)


def _check_binding(gen):
    n = int(gen.integers(3, 60))
    sched = Consecutive(int(gen.integers(1, 20))) if gen.random() < 0.5 else PowersOfTwo(int(gen.integers(0, 12)))
    a, b = GridState.random(n, gen), GridState.random(n, gen)
    return expand(a ^ b, sched) == expand(a, sched) ^ expand(b, sched)


def _check_seed_memory(gen):
    n = int(gen.integers(3, 40))
    mem = make_item_memory(int(gen.integers(1, 20)), Seeds(n, Consecutive(int(gen.integers(1, 12)))), gen)
    mat = mem.to_materialized()
    q = mem.row(int(gen.integers(0, mem.size))) ^ mem.row(0)
    return bool(np.array_equal(mem.materialize(), mat.materialize())) and nn_search(mem, q) == nn_search(mat, q)


def _check_periods(gen):
    return [period_report(n).randomization_period for n in (22, 23, 24, 37, 39)] == [31, 2047, 7, 87381, 4095]


SELFTEST_CHECKS: dict[str, Callable[[np.random.Generator], bool]] = {
    "step_linearity": _check_linearity,
    "shift_equivariance": _check_shift,
    "leap_vs_naive": _check_leap,
    "binding_preservation": _check_binding,
    "seed_vs_materialized": _check_seed_memory,
    "period_values": _check_periods,
}


def selftest(cases: int = 200, master_seed: int = 0) -> Table:
    """Run each exact invariant on ``cases`` random instances."""
    rows = []
    for name, check in SELFTEST_CHECKS.items():
        gen = _rng.stream(master_seed, "selftest", name)
        reps = 1 if name == "period_values" else cases
        failed = sum(not check(gen) for _ in range(reps))
        rows.append((name, reps, failed, int(failed == 0)))
    return Table("selftest", ["check", "cases", "failures", "passed"], rows)
