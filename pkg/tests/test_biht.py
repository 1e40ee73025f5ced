import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from capacity_lab import _fallback
from capacity_lab.biht import (BIHTConfig, Dataset, biht_run, generate_dataset,
                               greedy_biht, hard_threshold,
                               hard_threshold_with_support, mismatches,
                               objective, sign)
from capacity_lab.separability import separability_oracle

try:
    from capacity_lab import _kernels
except ImportError:  # pragma: no cover
    _kernels = None


# ------------------------------------------------------------ datasets

def test_dataset_reproducible():
    a = generate_dataset(4, 3, "binary", 11)
    b = generate_dataset(4, 3, "binary", 11)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)


def test_binary_statistics():
    d = generate_dataset(200, 300, "binary", 0)
    assert set(np.unique(d.X)) == {-1.0, 1.0}
    assert set(np.unique(d.y)) <= {-1.0, 1.0}
    assert abs(d.X.mean()) < 3 / np.sqrt(d.X.size)


def test_spherical_rows():
    d = generate_dataset(7, 20, "spherical", 1)
    np.testing.assert_allclose((d.X ** 2).sum(axis=1), 7.0, atol=1e-9)


def test_dataset_validation():
    with pytest.raises(ValueError):
        generate_dataset(0, 3)
    with pytest.raises(ValueError):
        generate_dataset(3, 0)
    with pytest.raises(ValueError):
        generate_dataset(3, 3, "gaussian")
    with pytest.raises(ValueError):
        Dataset(X=np.ones((2, 3)), y=np.array([1.0, 0.0]))


def test_config_validation():
    assert BIHTConfig().step(50) == pytest.approx(0.002 / 50)
    assert BIHTConfig(tau=0.1).step(50) == 0.1
    for kw in ({"tau": 0.0}, {"eps": 0.0}, {"L": 0}, {"init_scale": "square"}):
        with pytest.raises(ValueError):
            BIHTConfig(**kw)


def test_sign_convention():
    assert list(sign(np.array([-1.0, 0.0, 2.0]))) == [-1.0, 1.0, 1.0]


# ------------------------------------------------------------ thresholds

def test_hard_threshold_examples():
    assert list(hard_threshold([3, -5, 1, 0.5], 2)) == [3, -5, 0, 0]
    assert list(hard_threshold([2, -2, 1], 1)) == [2, 0, 0]
    v = np.array([0.3, -1.0, 2.0])
    assert np.array_equal(hard_threshold(v, 3), v)
    with pytest.raises(ValueError):
        hard_threshold(v, 0)
    with pytest.raises(ValueError):
        hard_threshold(v, 4)


def test_hard_threshold_with_support_examples():
    assert list(hard_threshold_with_support([1, 9, 2], 2, {0})) == [1, 9, 0]
    v = np.array([0.1, 5.0, -4.0, 0.2])
    assert list(hard_threshold_with_support(v, 2, {0, 3})) == [0.1, 0, 0, 0.2]
    assert np.array_equal(hard_threshold_with_support(v, 2, ()), hard_threshold(v, 2))
    with pytest.raises(ValueError):
        hard_threshold_with_support(v, 1, {0, 1})
    with pytest.raises(ValueError):
        hard_threshold_with_support(v, 2, {7})


vectors = arrays(np.float64, st.integers(1, 30),
                 elements=st.floats(-10, 10, allow_nan=False))


@given(v=vectors, data=st.data())
def test_hard_threshold_properties(v, data):
    K = data.draw(st.integers(1, v.size))
    out = hard_threshold(v, K)
    kept = out != 0
    assert kept.sum() == min(K, np.count_nonzero(v))
    assert np.array_equal(out[kept], v[kept])
    if kept.any() and (~kept).any():
        assert np.abs(v[kept]).min() >= np.abs(v[~kept]).max()


@given(v=vectors, data=st.data())
def test_support_threshold_properties(v, data):
    K = data.draw(st.integers(1, v.size))
    fixed = data.draw(st.sets(st.integers(0, v.size - 1), max_size=K))
    out = hard_threshold_with_support(v, K, fixed)
    for i in fixed:
        assert out[i] == v[i]
    free = [i for i in range(v.size) if i not in fixed]
    chosen = [i for i in free if out[i] != 0]
    assert len(chosen) <= K - len(fixed)
    rest = [i for i in free if out[i] == 0]
    if chosen and rest:
        assert min(abs(v[i]) for i in chosen) >= max(abs(v[i]) for i in rest)


# ------------------------------------------------------------ BIHT

def test_consistent_start_exits_after_one_iteration():
    d = generate_dataset(6, 5, "binary", 3)
    w = np.zeros(6)
    w[1] = 1.0
    d = Dataset(X=d.X, y=sign(d.X @ w))
    out, trace, its = biht_run(d, 1, w)
    assert its == 1 and trace[0] == 0.0
    assert np.array_equal(out, w)


def test_biht_normalizes_and_respects_support():
    d = generate_dataset(10, 15, "binary", 4)
    w0 = np.random.default_rng(0).standard_normal(10)
    w, trace, its = biht_run(d, 3, w0, I_f={7}, cfg=BIHTConfig(L=50))
    assert np.linalg.norm(w) == pytest.approx(1.0)
    assert np.count_nonzero(w) <= 3 and w[7] != 0
    assert len(trace) == its <= 50


def test_biht_rejects_bad_input():
    d = generate_dataset(5, 5, "binary", 0)
    with pytest.raises(ValueError):
        biht_run(d, 2, np.full(5, np.nan))
    with pytest.raises(ValueError):
        biht_run(d, 2, np.ones(4))
    with pytest.raises(ValueError):
        biht_run(d, 1, np.ones(5), I_f={0, 1})


def test_objective_nonincreasing_early():
    # median change of J over the first steps is not positive
    deltas = []
    for seed in range(20):
        d = generate_dataset(32, 40, "binary", seed)
        w = np.random.default_rng(seed).standard_normal(32) / np.sqrt(32)
        cfg = BIHTConfig(tau=1e-4, L=1)
        prev = objective(w, d)
        for _ in range(5):
            w, _, _ = biht_run(d, 32, w, cfg=cfg)
            cur = objective(w / np.linalg.norm(w) * np.linalg.norm(w), d)
            deltas.append(cur - prev)
            prev = cur
    assert np.median(deltas) <= 0


def test_plain_biht_far_below_capacity():
    hits = 0
    for seed in range(200):
        d = generate_dataset(8, 4, "binary", [seed, 0])
        w0 = np.random.default_rng([seed, 1]).standard_normal(8) / np.sqrt(8)
        w, _, _ = biht_run(d, 8, w0)
        hits += mismatches(w, d) == 0
    assert hits / 200 >= 0.95


# ------------------------------------------------------------ greedy

def test_greedy_single_pattern():
    for seed in range(10):
        r = greedy_biht(generate_dataset(10, 1, "binary", seed), BIHTConfig(rng_seed=seed))
        assert r.success and r.K_final == 1


def test_greedy_support_grows_monotonically():
    d = generate_dataset(20, 24, "binary", 8)
    r = greedy_biht(d, BIHTConfig(rng_seed=2))
    for a, b in zip(r.history, r.history[1:]):
        assert set(a) <= set(b)
    assert len(r.history) == r.K_final
    assert 1 <= r.K_final <= 20 and r.rho_used == r.K_final / 20


def test_greedy_success_implies_separable_support():
    for seed in range(15):
        d = generate_dataset(16, 20, "binary", seed)
        r = greedy_biht(d, BIHTConfig(rng_seed=seed))
        assert r.success or r.K_final == 16
        if r.success:
            assert np.all(d.y * (d.X @ r.w) >= 0)
            assert separability_oracle(d, r.support)


def test_greedy_reproducible():
    d = generate_dataset(24, 30, "binary", 5)
    a = greedy_biht(d, BIHTConfig(rng_seed=9))
    b = greedy_biht(d, BIHTConfig(rng_seed=9))
    assert a == b


def test_shared_budget_and_multiply_modes():
    d = generate_dataset(16, 20, "binary", 6)
    r = greedy_biht(d, BIHTConfig(rng_seed=1, shared_budget=True, L=200))
    # once the shared budget is spent every later stage gets one iteration
    assert r.iterations_total <= 200 + r.K_final
    m = greedy_biht(d, BIHTConfig(rng_seed=1, init_scale="multiply"))
    assert 1 <= m.K_final <= 16


def test_greedy_beats_fixed_subset_bound():
    N, alpha = 32, 1.2
    P = int(round(alpha * N))
    gaps = []
    for seed in range(20):
        r = greedy_biht(generate_dataset(N, P, "binary", [seed, 0]),
                        BIHTConfig(rng_seed=seed))
        if r.success:
            gaps.append(alpha - 2 * r.rho_used)
    assert len(gaps) >= 10 and np.median(gaps) > 0


# ------------------------------------------------------------ backends

@pytest.mark.skipif(_kernels is None, reason="extension not built")
@pytest.mark.parametrize("seed", range(5))
def test_backends_agree_on_biht_stage(seed):
    d = generate_dataset(24, 30, "binary", seed)
    rng = np.random.default_rng(seed)
    w0 = rng.standard_normal(24) / 5
    fixed = np.zeros(24, np.uint8)
    fixed[rng.choice(24, 3, replace=False)] = 1
    args = (d.X, d.y, w0, 6, fixed, 0.002 / 30, 1e-8, 300)
    wa, ia, ta = _kernels.biht_stage(*args)
    wb, ib, tb = _fallback.biht_stage(*args)
    assert ia == ib
    np.testing.assert_allclose(wa, wb, atol=1e-12)
    np.testing.assert_allclose(ta, tb, atol=1e-14)
