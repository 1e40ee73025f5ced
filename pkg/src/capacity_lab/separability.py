"""
Exact separability checks for small instances.

``separability_oracle`` is the reference: a margin-1 feasibility LP solved
by HiGHS.  The exhaustive enumeration over supports uses the dense
simplex kernel instead, which decides the same question through the
Gordan alternative and is two orders of magnitude faster on tiny LPs.
"""
from __future__ import annotations

import math
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from ._backend import kernels
from .biht import Dataset, generate_dataset

__all__ = [
    "LPError",
    "MAX_SUBSETS",
    "separability_oracle",
    "separable_on",
    "all_supports",
    "exhaustive_capacity",
    "selection_probabilities",
    "crossing_point",
]

MAX_SUBSETS = 10 ** 6


class LPError(RuntimeError):
    """The LP solver returned neither an optimum nor a proof of infeasibility."""


def _check_support(data, support):
    support = np.asarray(sorted(set(int(i) for i in support)), dtype=np.int64)
    if support.size == 0:
        raise ValueError("support must be nonempty")
    if support[0] < 0 or support[-1] >= data.N:
        raise ValueError("support index out of range")
    return support


def separability_oracle(data: Dataset, support) -> bool:
    """Whether some weight vector on ``support`` classifies every pattern.

    Feasibility of ``y_mu (x_mu . w) >= 1`` for all ``mu`` with ``w`` zero
    off the support.

    Raises
    ------
    LPError
        If HiGHS reports anything other than optimal or infeasible.
    """
    support = _check_support(data, support)
    U = data.y[:, None] * data.X[:, support]
    M = support.size
    res = linprog(np.zeros(M), A_ub=-U, b_ub=-np.ones(data.P),
                  bounds=[(None, None)] * M, method="highs",
                  options={"primal_feasibility_tolerance": 1e-9,
                           "dual_feasibility_tolerance": 1e-9})
    if res.status == 0:
        return True
    if res.status == 2:
        return False
    raise LPError(f"linprog failed with status {res.status}: {res.message}")


def separable_on(data: Dataset, support) -> bool:
    """Kernel version of :func:`separability_oracle`."""
    support = _check_support(data, support)
    return kernels.separable(data.y[:, None] * data.X[:, support])


def all_supports(N: int, M: int) -> np.ndarray:
    """Every size-``M`` subset of ``range(N)`` as rows, lexicographic."""
    if not 1 <= M <= N:
        raise ValueError(f"need 1 <= M <= N, got M={M}, N={N}")
    count = math.comb(N, M)
    if count > MAX_SUBSETS:
        raise ValueError(f"C({N}, {M}) = {count} exceeds the enumeration "
                         f"guard of {MAX_SUBSETS}")
    return np.array(list(combinations(range(N), M)), dtype=np.int64)


def _dataset_seed(seed, P, trial):
    # one stream per (seed, P, trial): results do not depend on scheduling
    return np.random.SeedSequence([int(seed), int(P), int(trial)])


def selection_probabilities(N: int, M: int, P: int, trials: int, rng_seed=0,
                            ensemble: str = "binary"):
    """``(prob_any_subset, prob_fixed_subset)`` over random datasets.

    The fixed subset is the first ``M`` coordinates; by exchangeability any
    fixed choice has the same law.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    supports = all_supports(N, M)
    fixed = supports[:1]
    any_hits = fixed_hits = 0
    for k in range(trials):
        d = generate_dataset(N, P, ensemble, _dataset_seed(rng_seed, P, k))
        Z = d.y[:, None] * d.X
        if kernels.first_separable(Z, fixed) == 0:
            fixed_hits += 1
            any_hits += 1
        elif kernels.first_separable(Z, supports) >= 0:
            any_hits += 1
    return any_hits / trials, fixed_hits / trials


def exhaustive_capacity(N: int, M: int, P: int, trials: int, rng_seed=0,
                        ensemble: str = "binary") -> float:
    """Fraction of random datasets separable on at least one size-``M`` support."""
    return selection_probabilities(N, M, P, trials, rng_seed, ensemble)[0]


def crossing_point(P_values, probs, level: float = 0.5):
    """Smallest ``P`` whose probability drops below ``level`` (``None`` if never)."""
    for P, p in zip(P_values, probs):
        if p < level:
            return P
    return None
