"""
Replica-symmetric saddle point below the Cover-Gardner load.

For ``alpha < 2 rho`` the conjugate parameters stay finite and the
``m -> 0`` limit removes the ``H^m`` and ``Xi^m`` weights.  The
q1-equation then closes on its own: with ``gamma^2 = q1/(rho - q1)``,

    q1 rho / (rho - q1) = alpha * int Dt (H'(gamma t) / H(gamma t))^2,

after which ``q0`` solves a second one-dimensional fixed point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import (QuadratureGrid, default_grid, gauss_tail_deriv_ratio,
                       make_composite_grid, shifted_expect)
from .model import ConvergenceError, ModelPoint, RegimeError, SolverOptions

__all__ = [
    "RSOrderParams",
    "cover_gardner_capacity",
    "entropy_subcritical",
    "selection_potential",
    "collapsed_ratio_average",
    "double_ratio_average",
    "subcritical_residuals",
    "solve_subcritical",
    "subcritical_entropy_from_params",
]


@dataclass(frozen=True)
class RSOrderParams:
    q1: float
    q0: float
    qh1: float
    qh0: float
    Qh: float
    K: float
    gamma: float
    residual: float
    iterations: int


def cover_gardner_capacity(rho: float) -> float:
    """Load ``2 rho`` at which a typical fixed subset stops separating."""
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    return 2.0 * rho


def entropy_subcritical(rho: float) -> float:
    """Binary entropy of ``rho`` in nats (zero at ``rho = 1``)."""
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    if rho == 1.0:
        return 0.0
    return -(1.0 - rho) * math.log1p(-rho) - rho * math.log(rho)


def selection_potential(rho: float) -> float:
    """``K`` solving ``rho = e^-K / (1 + e^-K)``; ``-inf`` at ``rho = 1``."""
    if rho == 1.0:
        return -math.inf
    return math.log1p(-rho) - math.log(rho)


def subcritical_entropy_from_params(params: RSOrderParams, rho: float) -> float:
    """``lim_{m->0}`` of the RS free energy with the solved ``K``.

    Only ``ln(1 + e^-K) + K rho`` survives the limit.
    """
    K = params.K
    if math.isinf(K):
        return 0.0
    return float(np.logaddexp(0.0, -K)) + K * rho


def _kink_grid(gamma: float) -> QuadratureGrid:
    # resolve the transition of r(gamma t) around t = 0, width 1/gamma
    return make_composite_grid(fine=min(1.0, 1.0 / max(gamma, 1e-300)) * 0.5,
                               nodes_per_panel=16)


def collapsed_ratio_average(gamma: float) -> float:
    """``int Dt (H'(gamma t)/H(gamma t))^2``."""
    grid = _kink_grid(gamma)
    r = gauss_tail_deriv_ratio(gamma * grid.nodes)
    return grid.expect(r * r)


def _ratio_sq(x):
    r = gauss_tail_deriv_ratio(x)
    return r * r


def double_ratio_average(q1: float, q0: float, rho: float,
                         grid: QuadratureGrid | None = None,
                         power: int = 2) -> float:
    """Nested form ``int Dz [int Dy r(u)^p]`` or ``int Dz [int Dy r(u)]^2``.

    ``u = (sqrt(q1-q0) y + sqrt(q0) z) / sqrt(rho-q1)`` and ``r = H'/H``.
    ``power=2`` is the uncollapsed q-hat-1 integrand (inner square),
    ``power=1`` the q-hat-0 integrand (outer square).
    """
    grid = grid or default_grid()
    s = math.sqrt(rho - q1)
    scale = math.sqrt(max(q1 - q0, 0.0)) / s
    shift = math.sqrt(q0) / s * grid.nodes
    if power == 2:
        return grid.expect(shifted_expect(_ratio_sq, scale, shift))
    if power == 1:
        inner = shifted_expect(gauss_tail_deriv_ratio, scale, shift)
        return grid.expect(inner * inner)
    raise ValueError("power must be 1 or 2")


def _check_point(point: ModelPoint):
    if point.alpha >= point.alpha_cg:
        raise RegimeError(
            f"alpha={point.alpha} >= alpha_CG={point.alpha_cg}; "
            "use the supercritical solver")


def subcritical_residuals(params: RSOrderParams, point: ModelPoint,
                          grid: QuadratureGrid | None = None) -> np.ndarray:
    """Residuals of the six reduced saddle-point equations.

    Equations carrying the (possibly large) conjugates are scaled by
    ``max(1, |lhs|)`` so every entry is a relative-or-absolute error.
    """
    rho, alpha = point.rho, point.alpha
    q1, q0, qh1, qh0, Qh, K = (params.q1, params.q0, params.qh1,
                               params.qh0, params.Qh, params.K)
    gamma = math.sqrt(q1 / (rho - q1))
    a = alpha / (rho - q1)
    stiff = Qh + qh1
    r = np.empty(6)
    r[0] = (qh1 - a * collapsed_ratio_average(gamma)) / max(1.0, abs(qh1))
    r[1] = (qh0 - a * double_ratio_average(q1, q0, rho, grid, power=1)) \
        / max(1.0, abs(qh0))
    r[2] = rho - rho / stiff - q1
    r[3] = q1 - rho * qh1 / stiff ** 2
    r[4] = q0 - rho ** 2 * qh0 / stiff ** 2
    r[5] = 0.0 if math.isinf(K) else rho - 1.0 / (1.0 + math.exp(K))
    return r


def _q1_map(q1, point):
    rho, alpha = point.rho, point.alpha
    gamma = math.sqrt(q1 / (rho - q1))
    return alpha * (rho - q1) * collapsed_ratio_average(gamma) / rho


def _q0_map(q0, q1, point, grid):
    rho, alpha = point.rho, point.alpha
    return alpha * (rho - q1) * double_ratio_average(q1, q0, rho, grid, power=1)


def solve_subcritical(point: ModelPoint, grid: QuadratureGrid | None = None,
                      opts: SolverOptions | None = None) -> RSOrderParams:
    """Solve the reduced RS equations at ``alpha < 2 rho``.

    Damped fixed-point iteration, first on ``q1`` alone, then on ``q0``
    with ``q1`` frozen.  The conjugates follow in closed form.

    Raises
    ------
    RegimeError
        If ``alpha >= 2 rho``.
    ConvergenceError
        If either loop exhausts ``opts.max_iter``.
    """
    opts = opts or SolverOptions()
    grid = grid or default_grid()
    _check_point(point)
    rho = point.rho
    eta = opts.damping
    step_tol = 0.1 * opts.tolerance

    q1 = 0.5 * rho
    its = 0
    for its in range(1, opts.max_iter + 1):
        new = _q1_map(q1, point)
        # stay strictly inside (0, rho)
        new = min(max(new, 0.0), rho * (1.0 - 1e-15))
        diff = abs(new - q1)
        q1 = (1.0 - eta) * q1 + eta * new
        # the conjugates scale like 1/(rho - q1)^2: measure the step on the gap
        if diff < step_tol * min(1.0, (rho - q1) / rho):
            q1 = new
            break
    else:
        raise ConvergenceError(f"q1 loop did not converge at {point}", diff)

    q0 = 0.25 * rho if q1 > 0.25 * rho else 0.5 * q1
    inner = 0
    if q1 == 0.0:
        q0 = 0.0
    else:
        for inner in range(1, opts.max_iter + 1):
            new = min(max(_q0_map(q0, q1, point, grid), 0.0), q1)
            diff = abs(new - q0)
            q0 = (1.0 - eta) * q0 + eta * new
            # the q0 equation is checked relative to qh0, which scales with q0
            if diff < step_tol * min(1.0, max(new / rho, 1e-6)):
                q0 = new
                break
        else:
            raise ConvergenceError(f"q0 loop did not converge at {point}", diff)

    stiff = rho / (rho - q1)
    qh1 = q1 * rho / (rho - q1) ** 2
    qh0 = q0 * stiff ** 2 / rho ** 2
    params = RSOrderParams(q1=q1, q0=q0, qh1=qh1, qh0=qh0, Qh=stiff - qh1,
                           K=selection_potential(rho),
                           gamma=math.sqrt(q1 / (rho - q1)),
                           residual=float("nan"), iterations=its + inner)
    res = float(np.abs(subcritical_residuals(params, point, grid)).max())
    if not res < opts.tolerance:
        raise ConvergenceError(
            f"subcritical residual {res:.3e} above tolerance at {point}", res)
    return RSOrderParams(**{**params.__dict__, "residual": res})
