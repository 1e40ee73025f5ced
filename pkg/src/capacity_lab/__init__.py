"""Storage capacity of a perceptron that may select a fraction of its inputs.

Replica-symmetric saddle-point solvers on both sides of the Cover-Gardner
load ``alpha = 2 rho``, the local stability margin, and Monte Carlo checks
(greedy BIHT and exact enumeration over supports).
"""
from ._backend import BACKEND
from .biht import (BIHTConfig, Dataset, TrialResult, biht_run, generate_dataset,
                   greedy_biht, hard_threshold, hard_threshold_with_support)
from .gaussian import (InnerMomentsH, InnerMomentsXi, QuadratureGrid,
                       default_grid, inner_moments_H, inner_moments_Xi,
                       make_grid)
from .model import (ConvergenceError, ModelPoint, RegimeError, SolverError,
                    SolverOptions)
from .separability import (exhaustive_capacity, selection_probabilities,
                           separability_oracle)
from .stability import ATReport, at_check, at_margin, at_margin_subcritical
from .subcritical import (RSOrderParams, cover_gardner_capacity,
                          entropy_subcritical, solve_subcritical)
from .supercritical import (CapacityResult, RescaledOrderParams, capacity_vs,
                            entropy_supercritical, solve_supercritical)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BIHTConfig", "Dataset", "TrialResult", "biht_run",
    "generate_dataset", "greedy_biht", "hard_threshold",
    "hard_threshold_with_support", "InnerMomentsH", "InnerMomentsXi",
    "QuadratureGrid", "default_grid", "inner_moments_H", "inner_moments_Xi",
    "make_grid", "ConvergenceError", "ModelPoint", "RegimeError", "SolverError",
    "SolverOptions", "exhaustive_capacity", "selection_probabilities",
    "separability_oracle", "ATReport", "at_check", "at_margin",
    "at_margin_subcritical", "RSOrderParams", "cover_gardner_capacity",
    "entropy_subcritical", "solve_subcritical", "CapacityResult",
    "RescaledOrderParams", "capacity_vs", "entropy_supercritical",
    "solve_supercritical",
]
