import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from capacity_lab import _fallback
from capacity_lab.biht import Dataset, generate_dataset
from capacity_lab.separability import (all_supports, crossing_point,
                                       exhaustive_capacity, separability_oracle,
                                       selection_probabilities, separable_on)

try:
    from capacity_lab import _kernels
except ImportError:  # pragma: no cover
    _kernels = None


def perceptron(U, max_epochs=100000):
    """Classical perceptron on rows of U; converges iff separable."""
    w = np.zeros(U.shape[1])
    for _ in range(max_epochs):
        bad = np.flatnonzero(U @ w <= 0)
        if bad.size == 0:
            return True
        w += U[bad[0]]
    return False


def test_single_pattern_separable():
    d = generate_dataset(5, 1, "binary", 0)
    assert separability_oracle(d, [2])
    assert separable_on(d, [2])


def test_contradiction():
    x = np.array([[1.0, -1.0, 1.0], [1.0, -1.0, 1.0]])
    d = Dataset(X=x, y=np.array([1.0, -1.0]))
    assert not separability_oracle(d, [0, 1, 2])
    assert not separable_on(d, [0, 1, 2])


def test_support_validation():
    d = generate_dataset(5, 3, "binary", 0)
    with pytest.raises(ValueError):
        separability_oracle(d, [])
    with pytest.raises(ValueError):
        separability_oracle(d, [5])


def test_agrees_with_perceptron_on_separable_fixtures():
    rng = np.random.default_rng(0)
    for k in range(100):
        d = generate_dataset(12, 10, "binary", [k, 0])
        support = np.sort(rng.choice(12, 6, replace=False))
        teacher = rng.standard_normal(6)
        margin = d.X[:, support] @ teacher
        d = Dataset(X=d.X, y=np.where(margin >= 0, 1.0, -1.0))
        U = d.y[:, None] * d.X[:, support]
        assert perceptron(U)
        assert separability_oracle(d, support)
        assert separable_on(d, support)


@pytest.mark.parametrize("impl", ["fallback", "compiled"])
def test_kernel_matches_lp(impl):
    kern = _fallback if impl == "fallback" else _kernels
    if kern is None:
        pytest.skip("extension not built")
    rng = np.random.default_rng(1)
    for k in range(300):
        M, P = int(rng.integers(1, 8)), int(rng.integers(1, 20))
        ens = "binary" if k % 2 else "spherical"
        d = generate_dataset(M, P, ens, [k, 7])
        U = d.y[:, None] * d.X
        assert kern.separable(U) == separability_oracle(d, range(M))


@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 5)),
              elements=st.sampled_from([-1.0, 1.0])))
def test_kernel_matches_lp_binary_property(U):
    d = Dataset(X=U, y=np.ones(U.shape[0]))
    assert _fallback.separable(U) == separability_oracle(d, range(U.shape[1]))


@pytest.mark.skipif(_kernels is None, reason="extension not built")
def test_first_separable_backends_agree():
    S = np.array(list(combinations(range(8), 3)), dtype=np.int64)
    for k in range(20):
        d = generate_dataset(8, 7, "binary", k)
        Z = d.y[:, None] * d.X
        assert _kernels.first_separable(Z, S) == _fallback.first_separable(Z, S)


def test_all_supports_and_guard():
    S = all_supports(12, 6)
    assert S.shape == (924, 6) and len({tuple(r) for r in S}) == 924
    with pytest.raises(ValueError):
        all_supports(40, 20)
    with pytest.raises(ValueError):
        all_supports(4, 5)


def test_p_one_probability_one():
    assert exhaustive_capacity(8, 3, 1, 20, 0) == 1.0


def cover_probability(P, N):
    return sum(math.comb(P - 1, k) for k in range(N)) / 2 ** (P - 1)


@pytest.mark.parametrize("N", [12, 16])
def test_full_support_cover_regime(N):
    # Cover: general-position points with P <= N are always separable
    assert cover_probability(N, N) == 1.0
    assert exhaustive_capacity(N, N, N, 100, 3) >= 0.9


def test_spherical_matches_cover_counting():
    # spherical patterns are in general position: Cover's formula is exact
    N, P, T = 4, 8, 400
    p = exhaustive_capacity(N, N, P, T, 2, ensemble="spherical")
    expect = cover_probability(P, N)
    assert abs(p - expect) < 4 * math.sqrt(expect * (1 - expect) / T)


def test_selection_advantage_at_p16():
    pa, pf = selection_probabilities(12, 6, 16, 200, 1)
    assert pa > pf
    assert 0 <= pf <= pa <= 1


def test_probabilities_reproducible():
    assert selection_probabilities(10, 4, 9, 30, 5) == selection_probabilities(10, 4, 9, 30, 5)


def test_crossing_point():
    assert crossing_point([1, 2, 3], [1.0, 0.6, 0.4]) == 3
    assert crossing_point([1, 2], [1.0, 0.9]) is None
