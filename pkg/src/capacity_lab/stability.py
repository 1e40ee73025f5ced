"""
Local (de Almeida-Thouless) stability of the replica-symmetric solution.

A perturbation of the inter-replica overlap inside one cluster is
amplified by ``lambda * lambda_hat`` per round trip through the energetic
and entropic parts; the RS saddle is locally stable while the product is
below one.

Above ``alpha = 2 rho``, with ``H~(v) = exp(-v^2/(2 chi)) for v > 0``, the
second derivative of ``ln H~`` is ``-Theta(v)/chi`` almost everywhere, so

    lambda     = alpha/chi^2 * int Dz <Theta(v)>_{H~},
    lambda_hat = 1/E^2 * int Dz sigmoid(ln J0 - K).

Below ``2 rho`` the same linearization with finite conjugates gives

    lambda     = alpha/(rho-q1)^2 * int Dt [(ln H)''(gamma t)]^2,
    lambda_hat = (rho - q1)^2 / rho.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .gaussian import (QuadratureGrid, default_grid, h_log_moments,
                       log_tail_second_deriv, xi_log_moments)
from .model import ModelPoint
from .subcritical import RSOrderParams, _kink_grid
from .supercritical import RescaledOrderParams

__all__ = ["ATReport", "at_check", "at_margin_subcritical", "at_margin"]


@dataclass(frozen=True)
class ATReport:
    """``lambda``, ``lambda_hat`` and the margin ``lambda * lambda_hat - 1``.

    The RS solution is stable when the margin is strictly negative.  On
    the rescaled branch the saddle-point equations force the margin to
    vanish identically (each cluster is isostatic: as many active
    constraints as selected weights), so a margin within ``tolerance`` of
    zero is reported as ``marginal`` and counts as *not* stable.
    """

    lam: float
    lam_hat: float
    tolerance: float = 1e-9

    @property
    def margin(self) -> float:
        return self.lam * self.lam_hat - 1.0

    @property
    def marginal(self) -> bool:
        return abs(self.margin) <= self.tolerance

    @property
    def stable(self) -> bool:
        return self.margin < -self.tolerance

    @property
    def status(self) -> str:
        if self.stable:
            return "stable"
        return "marginal" if self.marginal else "unstable"


def at_check(params: RescaledOrderParams, point: ModelPoint,
             grid: QuadratureGrid | None = None,
             tolerance: float = 1e-9) -> ATReport:
    """Stability of a rescaled (``alpha > 2 rho``) solution.

    ``tolerance`` should be no smaller than the solver residual: the
    margin of a converged solution is zero up to that residual.
    """
    grid = grid or default_grid()
    _, _, _, pos = h_log_moments(grid.nodes, params.q0, point.rho, params.chi)
    lam = point.alpha / params.chi ** 2 * grid.expect(pos)
    log_j0, _, _ = xi_log_moments(grid.nodes, params.F1, params.F0, params.E)
    occ = grid.expect(special.expit(log_j0 - params.K))
    return ATReport(lam=float(lam), lam_hat=float(occ / params.E ** 2),
                    tolerance=tolerance)


def at_margin_subcritical(params: RSOrderParams, point: ModelPoint,
                          grid: QuadratureGrid | None = None,
                          tolerance: float = 1e-9) -> ATReport:
    """Stability of a finite-conjugate (``alpha < 2 rho``) solution.

    ``grid`` is accepted for interface symmetry; the collapsed integral is
    taken on a grid refined around the kink of ``ln H(gamma t)``.
    """
    gap = point.rho - params.q1
    g = _kink_grid(params.gamma) if params.gamma > 0 else (grid or default_grid())
    d2 = log_tail_second_deriv(params.gamma * g.nodes)
    lam = point.alpha / gap ** 2 * g.expect(d2 * d2)
    return ATReport(lam=float(lam), lam_hat=gap ** 2 / point.rho,
                    tolerance=tolerance)


def at_margin(params, point: ModelPoint, grid: QuadratureGrid | None = None,
              tolerance: float = 1e-9) -> ATReport:
    """Dispatch on the parameter type."""
    if isinstance(params, RescaledOrderParams):
        return at_check(params, point, grid, tolerance)
    if isinstance(params, RSOrderParams):
        return at_margin_subcritical(params, point, grid, tolerance)
    raise TypeError(f"unsupported parameter type {type(params).__name__}")
