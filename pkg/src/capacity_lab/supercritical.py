"""
Rescaled replica-symmetric saddle point above the Cover-Gardner load.

Above ``alpha = 2 rho`` the conjugates diverge as ``m -> 0`` and the
equations are written in the rescaled variables

    F1 = m^2 qh1,  F0 = m^2 qh0,  E = m (Qh + qh1),  chi = (rho - q1)/m.

Given ``(q0, chi)`` the two ``F`` equations are explicit, ``E = rho/chi``
is imposed exactly and ``K`` is fixed by the selection-count equation, so
the solve is a two-dimensional root problem in ``(q0, ln chi)``.  It is
driven by a damped Newton iteration with step halving, and the capacity
search continues the solution upward in ``alpha`` from just above
``2 rho``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize, special

from .gaussian import (DivergenceError, QuadratureGrid, default_grid,
                       h_log_moments, xi_log_moments)
from .model import (ConvergenceError, ModelPoint, RegimeError, SolverError,
                    SolverOptions)
from .subcritical import entropy_subcritical, solve_subcritical

__all__ = [
    "RescaledOrderParams",
    "CapacityResult",
    "SupercriticalState",
    "evaluate_state",
    "supercritical_residuals",
    "solve_supercritical",
    "entropy_supercritical",
    "continuation_seed",
    "capacity_vs",
    "solve_branch",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RescaledOrderParams:
    F1: float
    F0: float
    E: float
    chi: float
    q0: float
    K: float
    Sigma: float
    residual: float
    iterations: int


@dataclass(frozen=True)
class CapacityResult:
    rho: float
    alpha_cg: float
    alpha_vs: float
    bracket: tuple
    sigma_residual: float
    params: RescaledOrderParams | None = None
    trace: list = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class SupercriticalState:
    """All outer integrands at one ``(q0, chi, K)``, sampled on a grid."""

    F1: float
    F0: float
    E: float
    chi: float
    q0: float
    K: float
    log_i0: np.ndarray
    ratio1: np.ndarray   # I1/I0
    ratio2: np.ndarray   # I2/I0
    frac_pos: np.ndarray  # Ipos/I0
    log_j0: np.ndarray
    mean_h: np.ndarray
    var_h: np.ndarray
    occupancy: np.ndarray  # e^-K J0 / (1 + e^-K J0)


def _h_side(point, q0, chi, grid):
    log_i0, r1, r2, pos = h_log_moments(grid.nodes, q0, point.rho, chi)
    pref = point.alpha / chi ** 2
    F1 = pref * grid.expect(r2)
    F0 = min(pref * grid.expect(r1 * r1), F1)
    return F1, F0, log_i0, r1, r2, pos


def _solve_K(rho, log_j0, grid):
    """``K`` with ``int Dz sigmoid(log J0 - K) = rho`` (monotone in ``K``)."""
    lo = float(log_j0.min()) - 60.0
    hi = float(log_j0.max()) + 60.0
    f = lambda K: grid.expect(special.expit(log_j0 - K)) - rho  # noqa: E731
    return optimize.brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps,
                           maxiter=500)


def evaluate_state(point: ModelPoint, q0: float, chi: float,
                   grid: QuadratureGrid, K: float | None = None) -> SupercriticalState:
    """Evaluate every integrand at ``(q0, chi)``.

    ``K`` is solved from the selection constraint unless given.
    """
    F1, F0, log_i0, r1, r2, pos = _h_side(point, q0, chi, grid)
    E = point.rho / chi
    log_j0, mean, var = xi_log_moments(grid.nodes, F1, F0, E)
    if K is None:
        K = _solve_K(point.rho, log_j0, grid)
    occ = special.expit(log_j0 - K)
    return SupercriticalState(F1=F1, F0=F0, E=E, chi=chi, q0=q0, K=K,
                              log_i0=log_i0, ratio1=r1, ratio2=r2,
                              frac_pos=pos, log_j0=log_j0, mean_h=mean,
                              var_h=var, occupancy=occ)


def _core_residual(st: SupercriticalState, point: ModelPoint, grid):
    E2 = st.E * st.E
    s, m = st.occupancy, st.mean_h
    return np.array([
        grid.expect(s * (m * m + st.var_h)) / E2 - point.rho,
        grid.expect((s * m) ** 2) / E2 - st.q0,
    ])


def _entropy(st: SupercriticalState, point: ModelPoint, grid) -> float:
    rho, alpha = point.rho, point.alpha
    return (alpha * grid.expect(st.log_i0)
            + grid.expect(np.logaddexp(0.0, st.log_j0 - st.K))
            + st.K * rho + 0.5 * (st.E - st.F1) * rho
            - 0.5 * st.F1 * st.chi + 0.5 * st.F0 * st.q0)


def _params_from_state(st, point, grid, iterations):
    res = float(np.abs(supercritical_residuals(st, point, grid)).max())
    return RescaledOrderParams(F1=st.F1, F0=st.F0, E=st.E, chi=st.chi,
                               q0=st.q0, K=st.K, Sigma=float(_entropy(st, point, grid)),
                               residual=res, iterations=iterations)


def supercritical_residuals(params, point: ModelPoint,
                            grid: QuadratureGrid | None = None) -> np.ndarray:
    """Residuals of the six rescaled equations, in equation order.

    ``params`` is either a :class:`RescaledOrderParams` or a state.  The
    ``F`` and ``chi`` equations are scaled by ``max(1, |lhs|)``.
    """
    grid = grid or default_grid()
    rho, alpha = point.rho, point.alpha
    F1, F0, E, chi, q0, K = (params.F1, params.F0, params.E, params.chi,
                             params.q0, params.K)
    log_i0, r1, r2, _ = h_log_moments(grid.nodes, q0, rho, chi)
    log_j0, mean, var = xi_log_moments(grid.nodes, F1, F0, E)
    s = special.expit(log_j0 - K)
    pref = alpha / chi ** 2
    E2 = E * E
    return np.array([
        (F1 - pref * grid.expect(r2)) / max(1.0, abs(F1)),
        (F0 - pref * grid.expect(r1 * r1)) / max(1.0, abs(F0)),
        rho - grid.expect(s * (mean * mean + var)) / E2,
        (chi - rho / E) / max(1.0, abs(chi)),
        q0 - grid.expect((s * mean) ** 2) / E2,
        rho - grid.expect(s),
    ])


def entropy_supercritical(params: RescaledOrderParams, point: ModelPoint,
                          grid: QuadratureGrid | None = None) -> float:
    """Cluster entropy density at a converged rescaled solution."""
    grid = grid or default_grid()
    st = evaluate_state(point, params.q0, params.chi, grid, K=params.K)
    # F's and E are taken from params, not recomputed from (q0, chi)
    st = replace(st, F1=params.F1, F0=params.F0, E=params.E)
    log_j0, mean, var = xi_log_moments(grid.nodes, params.F1, params.F0, params.E)
    st = replace(st, log_j0=log_j0, mean_h=mean, var_h=var)
    return _entropy(st, point, grid)


def _try_state(point, x, grid):
    q0, lchi = x
    if not (0.0 <= q0 < point.rho) or not abs(lchi) < 300.0:
        return None, None
    try:
        st = evaluate_state(point, q0, math.exp(lchi), grid)
    except (DivergenceError, ValueError, OverflowError):
        return None, None
    r = _core_residual(st, point, grid)
    if not np.all(np.isfinite(r)):
        return None, None
    return st, r


def _solve_damped(fun, x, steps, opts, where):
    """Damped Newton with a forward-difference Jacobian.

    ``fun(x)`` returns ``(state, residual)`` or ``(None, None)`` outside the
    admissible region; ``steps`` are the difference increments per unknown.
    """
    x = np.asarray(x, dtype=float)
    st, r = fun(x)
    if st is None:
        raise ConvergenceError(f"inadmissible start {x} at {where}")
    target = 0.1 * opts.tolerance
    trace = []
    n = x.size
    for it in range(1, opts.max_iter + 1):
        norm = float(np.abs(r).max())
        trace.append(norm)
        if norm < target:
            return st, x, it
        J = np.empty((n, n))
        for j in range(n):
            h = steps[j]
            xp = x.copy()
            xp[j] += h
            _, rp = fun(xp)
            if rp is None:
                xp[j] -= 2 * h
                h = -h
                _, rp = fun(xp)
                if rp is None:
                    raise ConvergenceError(f"boundary hit at {x}", norm, trace)
            J[:, j] = (rp - r) / h
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise ConvergenceError("singular Jacobian", norm, trace) from None
        step = 1.0
        for _ in range(opts.max_halvings + 1):
            xn = x + step * dx
            stn, rn = fun(xn)
            if rn is not None and np.abs(rn).max() < (1.0 - 1e-4 * step) * norm:
                break
            step *= 0.5
        else:
            # no decrease; at the noise floor the current point may already do
            if norm < opts.tolerance:
                return st, x, it
            raise ConvergenceError(
                f"line search failed at {where} (residual {norm:.3e})",
                norm, trace)
        x, st, r = xn, stn, rn
    raise ConvergenceError(f"Newton budget exhausted at {where}",
                           float(np.abs(r).max()), trace)


def _newton(point, x, grid, opts):
    """Damped Newton on ``(q0, ln chi)`` at fixed ``alpha``."""
    x = np.asarray(x, dtype=float)
    steps = 1e-7 * np.maximum(1.0, np.abs(x))
    st, _, its = _solve_damped(lambda v: _try_state(point, v, grid), x,
                               steps, opts, point)
    return st, its


def _newton_at_chi(rho, lchi, x, grid, opts):
    """Damped Newton on ``(q0, alpha)`` at fixed ``ln chi``.

    Used where ``alpha`` barely moves along the branch while ``chi``
    still changes by orders of magnitude.
    """
    def fun(v):
        q0, alpha = v
        if not alpha > 2.0 * rho:
            return None, None
        return _try_state(ModelPoint(rho, alpha), (q0, lchi), grid)

    gap = rho - x[0]
    steps = np.array([1e-7 * min(1.0, max(gap, 1e-6) * 10.0), 1e-9])
    st, v, its = _solve_damped(fun, x, steps, opts, f"rho={rho}, ln chi={lchi}")
    return st, float(v[1]), its


def continuation_seed(rho: float, offset: float,
                      grid: QuadratureGrid | None = None,
                      opts: SolverOptions | None = None):
    """Starting point ``(q0, ln chi)`` at ``alpha = 2 rho (1 + offset)``.

    ``q0`` is carried over from the subcritical solution mirrored below
    the transition.  ``chi`` diverges like ``1/offset`` at the transition;
    the prefactor is a rough fit refined by Newton.
    """
    sub = solve_subcritical(ModelPoint(rho, 2.0 * rho * (1.0 - offset)), grid, opts)
    chi0 = 0.18 * rho / offset
    return np.array([sub.q0, math.log(chi0)])


def _check_regime(point):
    if point.rho >= 1.0:
        raise ValueError("the supercritical branch needs rho < 1")
    if point.alpha <= point.alpha_cg:
        raise RegimeError(
            f"alpha={point.alpha} <= alpha_CG={point.alpha_cg}; "
            "use the subcritical solver")


class _Branch:
    """Solution branch continued in ``t = ln(alpha/alpha_CG - 1)``.

    Near the transition ``chi ~ 1/(alpha/alpha_CG - 1)``, so ``ln chi`` is
    close to linear in ``t`` and a secant predictor is accurate.  Several
    RS solutions coexist at larger loads; a corrector that lands far from
    the predictor is treated as a branch jump and the step is halved.
    """

    max_jump = np.array([0.05, 0.75])  # |dq0|/rho, |d ln chi|

    def __init__(self, rho, grid, opts, seed=None):
        self.rho = rho
        self.acg = 2.0 * rho
        self.grid = grid
        self.opts = opts
        t0 = math.log(opts.start_offset)
        x0 = seed if seed is not None else continuation_seed(
            rho, opts.start_offset, grid, opts)
        st, its = _newton(ModelPoint(rho, self.alpha(t0)), x0, grid, opts)
        self.points = [(t0, self._x(st), st, its)]

    def alpha(self, t):
        return self.acg * (1.0 + math.exp(t))

    def t_of(self, alpha):
        return math.log(alpha / self.acg - 1.0)

    @staticmethod
    def _x(st):
        return np.array([st.q0, math.log(st.chi)])

    def _predict(self, t):
        t1, x1 = self.points[-1][:2]
        if len(self.points) < 2:
            # chi ~ 1/(alpha - alpha_CG) near the transition
            return x1 - np.array([0.0, t - t1])
        t0, x0 = self.points[-2][:2]
        if t1 == t0:
            return x1.copy()
        guess = x1 + (x1 - x0) * (t - t1) / (t1 - t0)
        if not 0.0 <= guess[0] < self.rho:
            guess[0] = x1[0]
        return guess

    def _accept(self, x_new, x_ref):
        d = np.abs(x_new - x_ref) / np.array([self.rho, 1.0])
        return bool(np.all(d <= self.max_jump))

    def solve_at_t(self, t, x0=None):
        point = ModelPoint(self.rho, self.alpha(t))
        guess = self._predict(t) if x0 is None else x0
        st, its = _newton(point, guess, self.grid, self.opts)
        if not self._accept(self._x(st), guess):
            raise ConvergenceError(f"branch jump near alpha={point.alpha}")
        return st, its

    def advance(self, h):
        """Step ``t`` forward by up to ``h``, halving on failure or jump."""
        t = self.points[-1][0]
        for _ in range(self.opts.max_halvings + 10):
            try:
                st, its = self.solve_at_t(t + h)
            except ConvergenceError:
                h *= 0.5
                continue
            self.points.append((t + h, self._x(st), st, its))
            return t + h, h, st, its
        raise ConvergenceError(
            f"continuation stalled at alpha={self.alpha(t)} (rho={self.rho})")

    def walk_to(self, alpha):
        target = self.t_of(alpha)
        t, _, st, its = self.points[-1]
        total = its
        h = 0.5
        while t < target - 1e-15:
            step = min(h, target - t)
            t, used, st, its = self.advance(step)
            total += its
            h = min(1.5 * used, 0.5) if used == step else used
        return st, total


class _ChiBranch:
    """Continuation in ``ln chi`` with ``(q0, alpha)`` as unknowns.

    Takes over from :class:`_Branch` when ``alpha`` saturates: for ``rho``
    close to one the branch runs into a load where ``q0 -> rho`` and
    ``chi -> 0`` while the entropy is still positive, and equal steps in
    ``alpha`` stop being a usable parametrization.
    """

    max_jump = np.array([0.05, 0.05])  # |dq0|/rho, |d alpha|

    def __init__(self, rho, grid, opts, points):
        self.rho = rho
        self.grid = grid
        self.opts = opts
        # entries (ln chi, [q0, alpha], state)
        self.points = points

    def _predict(self, lchi):
        l1, x1 = self.points[-1][:2]
        l0, x0 = self.points[-2][:2]
        if l1 == l0:
            return x1.copy()
        guess = x1 + (x1 - x0) * (lchi - l1) / (l1 - l0)
        if not 0.0 <= guess[0] < self.rho:
            guess[0] = x1[0]
        if not guess[1] > 2.0 * self.rho:
            guess[1] = x1[1]
        return guess

    def accept(self, x_new, x_ref):
        d = np.abs(x_new - x_ref) / np.array([self.rho, 1.0])
        return bool(np.all(d <= self.max_jump))

    def solve_at(self, lchi, guess):
        st, alpha, _ = _newton_at_chi(self.rho, lchi, guess, self.grid, self.opts)
        x = np.array([st.q0, alpha])
        if not self.accept(x, guess):
            raise ConvergenceError(f"branch jump near ln chi={lchi}")
        return x, st

    def advance(self, h):
        lchi = self.points[-1][0]
        for _ in range(self.opts.max_halvings + 10):
            try:
                x, st = self.solve_at(lchi - h, self._predict(lchi - h))
            except ConvergenceError:
                h *= 0.5
                continue
            self.points.append((lchi - h, x, st))
            return lchi - h, h, x, st
        raise ConvergenceError(
            f"chi continuation stalled at ln chi={lchi} (rho={self.rho})")


def _capacity_in_chi(branch, grid, opts, trace):
    """Finish the capacity search along ``ln chi`` once ``alpha`` saturates."""
    rho = branch.rho
    pts = []
    for t, x, st, _ in branch.points[-2:]:
        pts.append((x[1], np.array([x[0], branch.alpha(t)]), st))
    cb = _ChiBranch(rho, grid, opts, pts)
    h = 0.5
    lo = None
    for _ in range(400):
        l_prev, x_prev = cb.points[-1][:2]
        lchi, used, x, st = cb.advance(h)
        sig = _entropy(st, ModelPoint(rho, x[1]), grid)
        trace.append((x[1], sig))
        log.debug("rho=%g ln chi=%.4f alpha=%.9f Sigma=%.3e", rho, lchi, x[1], sig)
        if sig < 0.0:
            # entropy decreases as chi shrinks: lo (chi large) has Sigma > 0
            lo, lo_x, hi, hi_x = l_prev, x_prev, lchi, x
            break
        h = min(1.5 * used if used == h else used, 1.0)
    if lo is None:
        raise ConvergenceError(f"entropy stays positive along the chi branch "
                               f"at rho={rho}", trace=trace)
    best = (hi_x, sig, st)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        w = (mid - lo) / (hi - lo)
        guess = (1 - w) * lo_x + w * hi_x
        x, st = cb.solve_at(mid, guess)
        sig = _entropy(st, ModelPoint(rho, x[1]), grid)
        trace.append((x[1], sig))
        if abs(sig) < abs(best[1]):
            best = (x, sig, st)
        if sig > 0.0:
            lo, lo_x = mid, x
        else:
            hi, hi_x = mid, x
        if (abs(hi_x[1] - lo_x[1]) < opts.alpha_tolerance
                and abs(best[1]) < opts.sigma_tolerance):
            break
    else:
        raise ConvergenceError(f"bisection did not settle at rho={rho}",
                               abs(best[1]), trace)
    x, sig, st = best
    alpha_vs = float(x[1])
    params = _params_from_state(st, ModelPoint(rho, alpha_vs), grid, 0)
    return CapacityResult(rho=rho, alpha_cg=2.0 * rho, alpha_vs=alpha_vs,
                          bracket=(float(lo_x[1]), float(hi_x[1])),
                          sigma_residual=sig, params=params, trace=trace)


def solve_supercritical(point: ModelPoint, grid: QuadratureGrid | None = None,
                        warm_start: RescaledOrderParams | None = None,
                        opts: SolverOptions | None = None) -> RescaledOrderParams:
    """Solve the rescaled RS equations at ``alpha > 2 rho``.

    With ``warm_start`` Newton starts from its ``(q0, chi)``.  Without one,
    the branch is continued from just above ``2 rho`` up to ``point.alpha``.

    Raises
    ------
    RegimeError
        If ``alpha <= 2 rho``.
    ConvergenceError
        If Newton (or the continuation) fails; ``.trace`` holds residuals.
    """
    opts = opts or SolverOptions()
    grid = grid or default_grid()
    _check_regime(point)
    if warm_start is not None:
        x0 = np.array([warm_start.q0, math.log(warm_start.chi)])
        st, its = _newton(point, x0, grid, opts)
    else:
        start = point.alpha_cg * (1.0 + opts.start_offset)
        if point.alpha <= start:
            x0 = continuation_seed(point.rho, point.alpha / point.alpha_cg - 1.0,
                                   grid, opts)
            st, its = _newton(point, x0, grid, opts)
        else:
            branch = _Branch(point.rho, grid, opts)
            st, its = branch.walk_to(point.alpha)
    params = _params_from_state(st, point, grid, its)
    if not params.residual < opts.tolerance:
        raise ConvergenceError(
            f"residual {params.residual:.3e} above tolerance at {point}",
            params.residual)
    if params.Sigma > entropy_subcritical(point.rho) + opts.tolerance:
        raise ConvergenceError(
            f"converged to a non-physical branch at {point}: "
            f"Sigma={params.Sigma:.6g} exceeds the selection entropy",
            params.residual)
    return params


def capacity_vs(rho: float, grid: QuadratureGrid | None = None,
                opts: SolverOptions | None = None) -> CapacityResult:
    """Locate ``alpha_VS(rho)``, the zero of the cluster entropy.

    The branch is continued upward from just above ``2 rho`` until the
    entropy changes sign, then the bracket is bisected in ``alpha`` (each
    midpoint warm-started by interpolating the bracket ends) until it is
    narrower than ``opts.alpha_tolerance`` and the entropy at the reported
    point is below ``opts.sigma_tolerance`` in magnitude.
    """
    opts = opts or SolverOptions()
    grid = grid or default_grid()
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    branch = _Branch(rho, grid, opts)
    t, x, st, _ = branch.points[-1]
    a = branch.alpha(t)
    sig = _entropy(st, ModelPoint(rho, a), grid)
    trace = [(a, sig)]
    t_max = branch.t_of(opts.alpha_scan_max)
    h = 0.5
    lo = None
    while t < t_max:
        prev_a, prev_x = a, x
        try:
            t, used, st, _ = branch.advance(min(h, t_max - t))
        except ConvergenceError:
            if len(branch.points) < 2:
                raise
            log.debug("alpha continuation stalled at rho=%g; switching to chi", rho)
            return _capacity_in_chi(branch, grid, opts, trace)
        x = branch.points[-1][1]
        a = branch.alpha(t)
        sig = _entropy(st, ModelPoint(rho, a), grid)
        trace.append((a, sig))
        log.debug("rho=%g alpha=%.6f Sigma=%.3e", rho, a, sig)
        if sig < 0.0:
            lo, lo_x, hi, hi_x = prev_a, prev_x, a, x
            break
        if abs(x[1] - prev_x[1]) > opts.extra.get("chi_switch_slope", 3.0) * used:
            # chi runs away while alpha barely moves: alpha is saturating
            log.debug("alpha saturating at rho=%g; switching to chi", rho)
            return _capacity_in_chi(branch, grid, opts, trace)
        # keep alpha steps modest once past the transition region
        h_cap = math.log1p(0.05 / (a / branch.acg - 1.0))
        h = min(1.5 * used if used == h else used, 0.5, h_cap)
    if lo is None:
        raise ConvergenceError(
            f"entropy stays positive up to alpha={opts.alpha_scan_max} "
            f"at rho={rho}", trace=trace)

    best = (hi, sig, st)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        w = (mid - lo) / (hi - lo)
        st, _ = _newton(ModelPoint(rho, mid), (1 - w) * lo_x + w * hi_x, grid, opts)
        x = branch._x(st)
        if not (branch._accept(x, lo_x) and branch._accept(x, hi_x)):
            raise ConvergenceError(f"branch jump while bisecting at alpha={mid}",
                                   trace=trace)
        sig = _entropy(st, ModelPoint(rho, mid), grid)
        trace.append((mid, sig))
        if abs(sig) < abs(best[1]):
            best = (mid, sig, st)
        if sig > 0.0:
            lo, lo_x = mid, x
        else:
            hi, hi_x = mid, x
        if hi - lo < opts.alpha_tolerance and abs(best[1]) < opts.sigma_tolerance:
            break
    else:
        raise ConvergenceError(f"bisection did not settle at rho={rho}",
                               abs(best[1]), trace)
    alpha_vs, sig, st = best
    params = _params_from_state(st, ModelPoint(rho, alpha_vs), grid, 0)
    return CapacityResult(rho=rho, alpha_cg=2.0 * rho, alpha_vs=alpha_vs,
                          bracket=(lo, hi), sigma_residual=sig, params=params,
                          trace=trace)


def solve_branch(rho: float, alphas, grid: QuadratureGrid | None = None,
                 opts: SolverOptions | None = None) -> list:
    """Solve at increasing ``alphas > 2 rho`` along one continuation.

    Returns one entry per load: a :class:`RescaledOrderParams` or the
    exception raised for that load.  A failure restarts the continuation
    for the next load instead of aborting the sweep.
    """
    opts = opts or SolverOptions()
    grid = grid or default_grid()
    alphas = [float(a) for a in alphas]
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be strictly increasing")
    out = []
    branch = None
    for a in alphas:
        point = ModelPoint(rho, a)
        try:
            _check_regime(point)
            if a <= point.alpha_cg * (1.0 + opts.start_offset):
                out.append(solve_supercritical(point, grid, opts=opts))
                continue
            if branch is None:
                branch = _Branch(rho, grid, opts)
            st, its = branch.walk_to(a)
            params = _params_from_state(st, point, grid, its)
            if not params.residual < opts.tolerance:
                raise ConvergenceError(
                    f"residual {params.residual:.3e} above tolerance at {point}",
                    params.residual)
            if params.Sigma > entropy_subcritical(rho) + opts.tolerance:
                raise ConvergenceError(f"non-physical branch at {point}",
                                       params.residual)
            out.append(params)
        except (SolverError, ValueError, FloatingPointError) as exc:
            out.append(exc)
            branch = None
    return out
