"""Shared parameter types and solver errors."""
from __future__ import annotations

from dataclasses import dataclass, field


class SolverError(RuntimeError):
    """Base class for saddle-point solver failures."""


class ConvergenceError(SolverError):
    """Iteration budget exhausted; carries the last residual."""

    def __init__(self, message: str, residual: float = float("nan"),
                 trace: list | None = None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace or []


class RegimeError(SolverError, ValueError):
    """The requested load lies on the other side of the Cover-Gardner point."""


@dataclass(frozen=True)
class ModelPoint:
    """A point ``(rho, alpha)`` of the phase diagram."""

    rho: float
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @property
    def alpha_cg(self) -> float:
        return 2.0 * self.rho


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-10
    max_iter: int = 5000
    damping: float = 0.5
    # capacity search
    alpha_tolerance: float = 1e-4
    sigma_tolerance: float = 1e-8
    alpha_scan_max: float = 6.0
    # continuation start, relative offset above alpha_CG
    start_offset: float = 1e-3
    max_halvings: int = 20
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
