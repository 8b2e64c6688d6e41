import numpy as np
import pytest

from ca90hdc import experiments as ex
from ca90hdc.ca90 import PowersOfTwo


def test_period_table():
    t = ex.period_experiment([22, 23, 24, 37, 39, 16])
    rp = dict(zip(t.column("n"), t.column("randomization_period")))
    assert rp == {16: 3, 22: 31, 23: 2047, 24: 7, 37: 87381, 39: 4095}
    assert t.column("n") == sorted(t.column("n"))


def test_period_table_empirical():
    t = ex.period_experiment([9, 10], empirical=True, num_seeds=50, sims=10)
    for row in t.where():
        assert row["empirical_period"] == row["randomization_period"] and row["empirical_saturated"] == 1


def test_dof_table():
    t = ex.dof_experiment([9], num_seeds=30, max_steps=30, sims=2)
    assert len(t.rows) == 30 and t.summary["9"]["empirical_period"] == 7


def test_ber_table():
    t = ex.ber_experiment(37, [1, 4], PowersOfTwo(6), trials=20)
    one = t.where(flips=1)
    assert [r["step"] for r in one] == [0, 1, 2, 4, 8, 16, 32, 64]
    assert all(r["mean"] == pytest.approx(2 / 37) for r in one[1:])
    assert all(r["expected"] == pytest.approx(r["predicted_pow2"], abs=0.01) for r in t.where(flips=4)[1:])


def test_item_memory_table_and_job_invariance():
    kw = dict(n=11, d=20, bers=[0.3], steps=[1, 4], trials=6)
    a = ex.item_memory_experiment(**kw)
    b = ex.item_memory_experiment(jobs=2, **kw)
    assert a.rows == b.rows
    assert {r[0] for r in a.rows} == {"ca90", "iid"} and len(a.rows) == 4
    assert all(0 <= r[6] <= 1 for r in a.rows)


def test_flip_masks_exact_counts():
    g = np.random.default_rng(0)
    m = ex._flip_masks((30, 50), 17, g)
    assert np.all(m.sum(axis=1) == 17)
    assert not ex._flip_masks((3, 5), 0, g).any()


def test_buffer_table():
    t = ex.buffer_experiment(n=17, d=5, steps=[2, 4], delays=[1, 3], trials=2, train_len=400, test_len=200)
    assert len(t.rows) == 2 * 2 * 2
    assert t.columns[:6] == ["memory", "n", "d", "steps", "K", "delay"]


def test_resonator_table():
    t = ex.resonator_experiment(ns=[20], ms=[3], factors=2, steps=[1, 10], trials=4)
    assert len(t.rows) == 4
    big = [r for r in t.where(steps=10)]
    assert all(r["accuracy"] == 1.0 for r in big)


def test_noisy_resonator_table():
    t = ex.noisy_resonator_experiment(ns=[13], flips=[0, 2], factors=[2], info_bits=[4], exponents=[3, 6], trials=3)
    assert len(t.rows) == 4
    r = t.where(flips=2, exponent=6)[0]
    assert r["m"] == 4 and r["K"] == 13 * 7 and r["ber"] == pytest.approx(2 / 13)
    with pytest.raises(ValueError):
        ex.noisy_resonator_experiment(ns=[5], flips=[6], exponents=[1], trials=1)


def test_info_matched_sizes():
    assert ex.info_matched_size(4, 16) == 16
    assert ex.info_matched_size(3, 16) == 40


def test_selftest_passes():
    t = ex.selftest(cases=30)
    assert all(r[3] == 1 for r in t.rows)
