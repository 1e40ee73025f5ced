"""
Random pattern sets and greedy binary iterative hard thresholding.

BIHT takes a subgradient step on the one-bit consistency objective

    J(w) = || [y * (X w)]_- ||_1

and projects back onto K-sparse vectors.  The greedy variant starts at
``K = 1`` and grows the support one index at a time, keeping previously
selected indices fixed, until every pattern is classified correctly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from ._fallback import select_support

__all__ = [
    "Dataset",
    "BIHTConfig",
    "TrialResult",
    "generate_dataset",
    "sign",
    "objective",
    "mismatches",
    "hard_threshold",
    "hard_threshold_with_support",
    "biht_run",
    "greedy_biht",
]

ENSEMBLES = ("binary", "spherical")


@dataclass(frozen=True, eq=False)
class Dataset:
    """``P`` patterns of dimension ``N`` with labels in {+1, -1}."""

    X: np.ndarray
    y: np.ndarray
    ensemble: str = "binary"

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        y = np.ascontiguousarray(self.y, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("X must be P x N and y of length P")
        if not np.all(np.abs(y) == 1.0):
            raise ValueError("labels must be +1 or -1")
        if self.ensemble not in ENSEMBLES:
            raise ValueError(f"unknown ensemble {self.ensemble!r}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def P(self) -> int:
        return self.X.shape[0]

    @property
    def N(self) -> int:
        return self.X.shape[1]

    @property
    def alpha(self) -> float:
        return self.P / self.N


@dataclass(frozen=True)
class BIHTConfig:
    """Step size, stopping rule and initialization of greedy BIHT.

    Parameters
    ----------
    tau : float, optional
        Gradient step; ``None`` means ``0.002 / P``.
    eps : float
        Stop a stage once ``||w_l - w_{l-1}|| / N <= eps``.
    L : int
        Iteration budget per stage (or in total if ``shared_budget``).
    rng_seed : int or sequence of int
        Seed of the Gaussian initialization.
    shared_budget : bool
        Share one budget of ``L`` iterations across all stages instead of
        resetting it at every ``K``.
    init_scale : {"divide", "multiply"}
        Gaussian entries divided (default) or multiplied by ``sqrt(N)``.
    """

    tau: float | None = None
    eps: float = 1e-8
    L: int = 1000
    rng_seed: int | tuple = 0
    shared_budget: bool = False
    init_scale: str = "divide"

    def __post_init__(self):
        if self.tau is not None and not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if self.init_scale not in ("divide", "multiply"):
            raise ValueError("init_scale must be 'divide' or 'multiply'")

    def step(self, P: int) -> float:
        return self.tau if self.tau is not None else 0.002 / P


@dataclass(frozen=True)
class TrialResult:
    success: bool
    K_final: int
    rho_used: float
    iterations_total: int
    objective_final: float
    support: tuple = field(default=(), repr=False)
    w: np.ndarray | None = field(default=None, repr=False, compare=False)
    # support after each stage, K = 1, 2, ...
    history: tuple = field(default=(), repr=False)


def generate_dataset(N: int, P: int, ensemble: str = "binary",
                     rng_seed=None) -> Dataset:
    """Draw ``P`` random patterns and labels.

    ``binary`` entries are uniform on {+1, -1}; ``spherical`` rows are
    uniform on the sphere of radius ``sqrt(N)``.  ``rng_seed`` may be an
    int, a ``SeedSequence`` or a ``Generator``.
    """
    if N < 1 or P < 1:
        raise ValueError(f"N and P must be positive, got N={N}, P={P}")
    if ensemble not in ENSEMBLES:
        raise ValueError(f"unknown ensemble {ensemble!r}")
    rng = np.random.default_rng(rng_seed)
    if ensemble == "binary":
        X = rng.choice(np.array([-1.0, 1.0]), size=(P, N))
    else:
        X = rng.standard_normal((P, N))
        X *= np.sqrt(N) / np.linalg.norm(X, axis=1, keepdims=True)
    y = rng.choice(np.array([-1.0, 1.0]), size=P)
    return Dataset(X=X, y=y, ensemble=ensemble)


def sign(x):
    """Elementwise sign with ``sign(0) = +1``."""
    return np.where(np.asarray(x) >= 0.0, 1.0, -1.0)


def objective(w, data: Dataset) -> float:
    """``J(w) = sum of |y (Xw)|`` over the negative entries."""
    d = data.y * (data.X @ w)
    return float(-d[d < 0.0].sum()) + 0.0  # no negative zero


def mismatches(w, data: Dataset) -> int:
    return int(np.count_nonzero(sign(data.X @ w) != data.y))


def _mask(n, idx):
    m = np.zeros(n, dtype=np.uint8)
    m[np.asarray(sorted(idx), dtype=int)] = 1
    return m


def hard_threshold_with_support(v, K: int, I_f=()) -> np.ndarray:
    """Keep ``I_f`` plus the ``K - |I_f|`` largest remaining magnitudes.

    Ties in magnitude go to the lowest index.
    """
    v = np.asarray(v, dtype=float)
    fixed = set(int(i) for i in I_f)
    if not 1 <= K <= v.size:
        raise ValueError(f"K must lie in [1, {v.size}], got {K}")
    if len(fixed) > K:
        raise ValueError(f"|I_f| = {len(fixed)} exceeds K = {K}")
    if fixed and not (min(fixed) >= 0 and max(fixed) < v.size):
        raise ValueError("I_f indices out of range")
    keep = select_support(v, K, _mask(v.size, fixed))
    return np.where(keep, v, 0.0)


def hard_threshold(v, K: int) -> np.ndarray:
    """``eta_K``: keep the ``K`` largest-magnitude entries of ``v``."""
    return hard_threshold_with_support(v, K, ())


def biht_run(data: Dataset, K: int, w_init, I_f=(), cfg: BIHTConfig | None = None,
             budget: int | None = None):
    """BIHT with ``I_f`` kept in the support.

    Returns ``(w, err_trace, iterations)`` with ``w`` normalized to unit
    length (left at zero if it vanished).
    """
    w, trace, its = _stage(data, K, w_init, I_f, cfg or BIHTConfig(), budget)
    nrm = np.linalg.norm(w)
    return (w / nrm if nrm > 0 else w), trace, its


def _stage(data, K, w_init, I_f, cfg, budget=None):
    w_init = np.asarray(w_init, dtype=float)
    if w_init.shape != (data.N,) or not np.all(np.isfinite(w_init)):
        raise ValueError("w_init must be a finite vector of length N")
    if not 1 <= K <= data.N:
        raise ValueError(f"K must lie in [1, {data.N}], got {K}")
    fixed = _mask(data.N, I_f)
    if int(fixed.sum()) > K:
        raise ValueError("|I_f| exceeds K")
    L = cfg.L if budget is None else budget
    w, its, trace = kernels.biht_stage(data.X, data.y, w_init, int(K), fixed,
                                       float(cfg.step(data.P)), float(cfg.eps),
                                       int(L))
    return w, trace, int(its)


def _grow(support, w):
    # an entry that lands exactly on zero stays selected
    return tuple(sorted(set(support) | set(int(i) for i in np.flatnonzero(w))))


def greedy_biht(data: Dataset, cfg: BIHTConfig | None = None) -> TrialResult:
    """Greedy BIHT: grow ``K`` from 1 until no pattern is misclassified.

    Each stage restarts from the previous (unnormalized) iterate with the
    previous support frozen.  Stages get ``cfg.L`` iterations each unless
    ``cfg.shared_budget`` is set, in which case a stage that would exceed
    the shared budget gets one iteration.
    """
    cfg = cfg or BIHTConfig()
    N = data.N
    rng = np.random.default_rng(cfg.rng_seed)
    w = rng.standard_normal(N)
    w = w / np.sqrt(N) if cfg.init_scale == "divide" else w * np.sqrt(N)

    def budget(total):
        if not cfg.shared_budget:
            return None
        return max(cfg.L - total, 1)

    K = 1
    w, _, its = _stage(data, K, w, (), cfg, budget(0))
    total = its
    support = _grow((), w)
    history = [support]
    while mismatches(w, data) > 0 and K < N:
        K += 1
        w, _, its = _stage(data, K, w, support, cfg, budget(total))
        total += its
        support = _grow(support, w)
        history.append(support)
    nrm = np.linalg.norm(w)
    w_out = w / nrm if nrm > 0 else w
    return TrialResult(success=mismatches(w, data) == 0, K_final=K,
                       rho_used=K / N, iterations_total=total,
                       objective_final=objective(w_out, data),
                       support=support, w=w_out, history=tuple(history))
