"""
Gaussian special functions and nested Gaussian-measure integrals.

Every saddle-point equation is an expectation against the standard
Gaussian measure

    Dz = dz exp(-z^2/2) / sqrt(2 pi),

usually nested: an outer average over ``z`` of ratios of inner averages
over ``y``.  The inner averages that appear here have closed forms
(truncated or tilted Gaussians), so only the outer ``z`` average is done
by quadrature.  The quadrature path for the inner averages is kept for
cross-checking.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special

__all__ = [
    "QuadratureGrid",
    "InnerMomentsH",
    "InnerMomentsXi",
    "DivergenceError",
    "make_grid",
    "make_composite_grid",
    "default_grid",
    "shifted_expect",
    "gauss_tail",
    "gauss_tail_deriv_ratio",
    "log_tail_second_deriv",
    "tilde_H",
    "tilde_Xi",
    "inner_moments_H",
    "inner_moments_Xi",
    "xi_log_moments",
    "h_log_moments",
]

_SQRT2 = np.sqrt(2.0)
_SQRT2PI = np.sqrt(2.0 * np.pi)
_SQRT_HALF_PI = np.sqrt(0.5 * np.pi)


class DivergenceError(ValueError):
    """The Gaussian-tilted integral diverges (E <= F1 - F0)."""


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and weights with ``sum(w * f(nodes)) ~ int Dz f(z)``."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def expect(self, values) -> float:
        """Weighted sum of ``values`` sampled at the nodes."""
        return float(np.dot(self.weights, values))

    def outer_expectation(self, f) -> float:
        """Approximate ``int Dz f(z)`` for a vectorized callable ``f``."""
        return self.expect(f(self.nodes))


_GRID_CACHE: dict[int, QuadratureGrid] = {}


def make_grid(order: int = 200) -> QuadratureGrid:
    """Gauss-Hermite rule for the standard Gaussian measure.

    Uses the probabilists' Hermite polynomials, so the weights already sum
    to one and no rescaling of the nodes is needed.
    """
    order = int(order)
    if order < 1:
        raise ValueError(f"quadrature order must be >= 1, got {order}")
    grid = _GRID_CACHE.get(order)
    if grid is None:
        x, w = special.roots_hermitenorm(order)
        w = w / w.sum()
        x.setflags(write=False)
        w.setflags(write=False)
        grid = QuadratureGrid(nodes=x, weights=w, order=order)
        _GRID_CACHE[order] = grid
    return grid


def _panel_rule(edges, nodes_per_panel):
    xg, wg = leggauss(nodes_per_panel)
    a, b = edges[:-1, None], edges[1:, None]
    x = (0.5 * (b - a) * (xg[None, :] + 1.0) + a).ravel()
    w = (0.5 * (b - a) * wg[None, :]).ravel()
    return x, w


def _half_edges(span, fine):
    # geometric panels from `fine` up to 1, unit panels beyond
    edges = [0.0]
    width = fine
    while width < 1.0:
        edges.append(width)
        width *= 2.0
    edges.extend(np.arange(1.0, span, 1.0))
    edges.append(span)
    return np.unique(np.asarray(edges))


def make_composite_grid(panel_width: float = 1.0, nodes_per_panel: int = 20,
                        span: float = 13.0, fine: float = 0.25) -> QuadratureGrid:
    """Composite Gauss-Legendre rule on ``[-span, span]`` weighted by Dz.

    Panels are ``panel_width`` wide, refined geometrically down to ``fine``
    around the origin.  Unlike Gauss-Hermite, the node spacing does not grow
    with the order, so integrands with sharp (but smooth) transitions are
    resolved.  Mass beyond ``|z| = 13`` is below 1e-38.
    """
    half = _half_edges(span / panel_width, fine / panel_width) * panel_width
    x, w = _panel_rule(half, nodes_per_panel)
    x = np.concatenate([-x[::-1], x])
    w = np.concatenate([w[::-1], w]) * np.exp(-0.5 * x * x) / _SQRT2PI
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureGrid(nodes=x, weights=w, order=x.size)


_DEFAULT = None


def default_grid() -> QuadratureGrid:
    """Outer rule used by the solvers unless a grid is passed explicitly."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = make_composite_grid()
    return _DEFAULT


def shifted_expect(f, scale, shift, nodes_per_panel: int = 16,
                   span: float = 13.0):
    """``int Dy f(scale*y + shift)`` for each entry of ``shift``.

    ``f`` may change rapidly around zero, i.e. around ``y* = -shift/scale``.
    Every row uses unit panels on ``[-span, span]`` plus geometric panels
    refined towards its own ``y*`` (down to ``min(1, 1/scale)/2``); rows
    share the panel count so the whole batch is one array operation.
    """
    shift = np.atleast_1d(np.asarray(shift, dtype=float))
    if scale == 0:
        return np.asarray(f(shift), dtype=float)
    fine = 0.5 * min(1.0, 1.0 / scale)
    offsets = [fine]
    while offsets[-1] < 1.0:
        offsets.append(2.0 * offsets[-1])
    offsets = np.asarray(offsets)
    centre = np.clip(-shift / scale, -span, span)
    base = np.arange(-span, span + 0.5, 1.0)
    edges = np.concatenate([
        np.broadcast_to(base, (shift.size, base.size)),
        centre[:, None],
        centre[:, None] - offsets[None, :],
        centre[:, None] + offsets[None, :],
    ], axis=1)
    edges = np.sort(np.clip(edges, -span, span), axis=1)
    xg, wg = leggauss(nodes_per_panel)
    lo, hi = edges[:, :-1, None], edges[:, 1:, None]
    y = 0.5 * (hi - lo) * (xg + 1.0) + lo
    w = 0.5 * (hi - lo) * wg * np.exp(-0.5 * y * y) / _SQRT2PI
    vals = f(scale * y + shift[:, None, None])
    return np.sum(w * vals, axis=(1, 2))


def gauss_tail(x):
    """Upper tail ``H(x) = int_x^inf Dz``."""
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / _SQRT2)


def gauss_tail_deriv_ratio(x):
    """``H'(x)/H(x)`` with ``H'(x) = -exp(-x^2/2)/sqrt(2 pi)``.

    For positive ``x`` the ratio is minus the inverse Mills ratio, which is
    evaluated through the scaled complementary error function so that it
    stays accurate far into the tail (where it behaves like ``-x``).
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x > 0
    xp = x[pos]
    out[pos] = -1.0 / (_SQRT_HALF_PI * special.erfcx(xp / _SQRT2))
    xn = x[~pos]
    out[~pos] = -np.exp(-0.5 * xn * xn) / _SQRT2PI / gauss_tail(xn)
    return out if out.ndim else float(out)


def log_tail_second_deriv(x):
    """``d^2/dx^2 ln H(x)``, which lies in (-1, 0).

    With ``r = H'/H`` this is ``-r (x + r)``.  For large ``x`` the sum
    ``x + r`` cancels, so an asymptotic series is used there.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    big = x > 30.0
    xs = x[~big]
    r = gauss_tail_deriv_ratio(xs)
    out[~big] = -r * (xs + r)
    xb = x[big]
    u = 1.0 / xb
    u2 = u * u
    # x + r = -s with s = u - 2u^3 + 10u^5 - 74u^7 + 706u^9
    s = u * (1.0 + u2 * (-2.0 + u2 * (10.0 + u2 * (-74.0 + u2 * 706.0))))
    out[big] = -(xb + s) * s
    return out if out.ndim else float(out)


def tilde_H(v, chi):
    """``Theta(-v) + Theta(v) exp(-v^2/(2 chi))`` with ``Theta(0) = 1``."""
    if not chi > 0:
        raise ValueError(f"chi must be positive, got {chi}")
    v = np.asarray(v, dtype=float)
    out = np.where(v > 0, np.exp(-0.5 * v * v / chi), 1.0)
    return out if out.ndim else float(out)


def tilde_Xi(h, E):
    """``exp(h^2 / (2E))``."""
    h = np.asarray(h, dtype=float)
    out = np.exp(0.5 * h * h / E)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class InnerMomentsH:
    """``int Dy Ht``, ``int Dy Ht Theta(v) v`` and ``int Dy Ht Theta(v) v^2``."""

    I0: np.ndarray
    I1: np.ndarray
    I2: np.ndarray
    # int Dy Ht Theta(v), needed by the stability check
    Ipos: np.ndarray


@dataclass(frozen=True)
class InnerMomentsXi:
    """``int Dy Xt``, ``int Dy Xt h`` and ``int Dy Xt h^2``."""

    J0: np.ndarray
    J1: np.ndarray
    J2: np.ndarray


def _check_h_domain(q0, rho, chi):
    if not chi > 0:
        raise ValueError(f"chi must be positive, got {chi}")
    if not 0 <= q0 < rho:
        raise ValueError(f"need 0 <= q0 < rho, got q0={q0}, rho={rho}")


def inner_moments_H(z, q0, rho, chi, grid: QuadratureGrid | None = None,
                    method: str = "exact") -> InnerMomentsH:
    """Moments of ``Ht(v, chi)`` over ``y`` with ``v = sqrt(rho-q0) y + sqrt(q0) z``.

    ``method="exact"`` uses the truncated-Gaussian closed form, which is
    smooth in ``z``.  ``method="quadrature"`` integrates over ``y`` on
    ``grid`` (a slow, kink-limited cross-check).
    """
    _check_h_domain(q0, rho, chi)
    z = np.asarray(z, dtype=float)
    S = rho - q0
    B = np.sqrt(q0) * z
    if method == "quadrature":
        if grid is None:
            grid = make_grid(200)
        v = np.sqrt(S) * grid.nodes[None, :] + np.atleast_1d(B)[:, None]
        ht = np.where(v > 0, np.exp(-0.5 * v * v / chi), 1.0)
        pos = (v > 0) * ht
        w = grid.weights
        out = InnerMomentsH(I0=ht @ w, I1=(pos * v) @ w, I2=(pos * v * v) @ w,
                            Ipos=pos @ w)
        if z.ndim == 0:
            out = InnerMomentsH(*(float(a[0]) for a in
                                  (out.I0, out.I1, out.I2, out.Ipos)))
        return out
    if method != "exact":
        raise ValueError(f"unknown method {method!r}")
    # v ~ N(B, S); tilting by exp(-v^2/(2 chi)) gives N(mu, sig2) times Z
    tot = S + chi
    mu = B * (chi / tot)
    sig = np.sqrt(S * chi / tot)
    Z = np.sqrt(chi / tot) * np.exp(-0.5 * B * B / tot)
    t = mu / sig
    p0 = special.ndtr(t)
    dens = np.exp(-0.5 * t * t) / _SQRT2PI
    m1 = mu * p0 + sig * dens
    m2 = (mu * mu + sig * sig) * p0 + mu * sig * dens
    neg = gauss_tail(B / np.sqrt(S))
    Ipos = Z * p0
    return InnerMomentsH(I0=neg + Ipos, I1=Z * m1, I2=Z * m2, Ipos=Ipos)


def xi_log_moments(z, F1, F0, E):
    """Closed form of the ``Xt`` moments, kept in log space.

    Returns ``(log J0, mean, var)`` where ``mean`` and ``var`` are the
    first two moments of ``h`` under the weight ``Xt(h, E) Dy``, so that
    ``J1 = J0 mean`` and ``J2 = J0 (mean^2 + var)``.
    """
    if not 0 <= F0 <= F1:
        raise ValueError(f"need 0 <= F0 <= F1, got F0={F0}, F1={F1}")
    a2 = F1 - F0
    gap = E - a2
    if not gap > 0:
        raise DivergenceError(f"E={E} must exceed F1-F0={a2}")
    c = np.sqrt(F0) * np.asarray(z, dtype=float)
    log_j0 = 0.5 * np.log(E / gap) + 0.5 * c * c / gap
    mean = c * (E / gap)
    var = a2 * E / gap
    return log_j0, mean, var + 0.0 * c


def inner_moments_Xi(z, F1, F0, E, grid: QuadratureGrid | None = None,
                     method: str = "exact") -> InnerMomentsXi:
    """Moments of ``Xt(h, E)`` over ``y`` with ``h = sqrt(F1-F0) y + sqrt(F0) z``.

    The exact path completes the square in ``y`` (a Gaussian tilt).  The
    quadrature path is unreliable when ``E`` approaches ``F1 - F0`` and is
    meant for testing only.
    """
    if method == "exact":
        log_j0, mean, var = xi_log_moments(z, F1, F0, E)
        J0 = np.exp(log_j0)
        return InnerMomentsXi(J0=J0, J1=J0 * mean, J2=J0 * (mean * mean + var))
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    if not 0 <= F0 <= F1:
        raise ValueError(f"need 0 <= F0 <= F1, got F0={F0}, F1={F1}")
    if not E > F1 - F0:
        raise DivergenceError(f"E={E} must exceed F1-F0={F1 - F0}")
    if grid is None:
        grid = make_grid(400)
    z = np.asarray(z, dtype=float)
    h = (np.sqrt(F1 - F0) * grid.nodes[None, :]
         + np.sqrt(F0) * np.atleast_1d(z)[:, None])
    xi = np.exp(0.5 * h * h / E)
    w = grid.weights
    J0, J1, J2 = xi @ w, (xi * h) @ w, (xi * h * h) @ w
    if z.ndim == 0:
        return InnerMomentsXi(float(J0[0]), float(J1[0]), float(J2[0]))
    return InnerMomentsXi(J0, J1, J2)


def h_log_moments(z, q0, rho, chi):
    """Normalized ``Ht`` moments that stay finite when ``I0`` underflows.

    Returns ``(log I0, I1/I0, I2/I0, Ipos/I0)``.
    """
    _check_h_domain(q0, rho, chi)
    z = np.asarray(z, dtype=float)
    S = rho - q0
    B = np.sqrt(q0) * z
    tot = S + chi
    mu = B * (chi / tot)
    sig = np.sqrt(S * chi / tot)
    t = mu / sig
    log_pos = 0.5 * np.log(chi / tot) - 0.5 * B * B / tot + special.log_ndtr(t)
    log_i0 = np.logaddexp(special.log_ndtr(-B / np.sqrt(S)), log_pos)
    frac = np.exp(log_pos - log_i0)
    a1, a2 = _truncated_moments(t)
    return log_i0, frac * sig * a1, frac * sig * sig * a2, frac


def _truncated_moments(t):
    """Standardized moments of ``t + X`` given ``t + X > 0``, ``X ~ N(0,1)``.

    Returns ``(E[t+X | .], E[(t+X)^2 | .])``.
    """
    t = np.asarray(t, dtype=float)
    a1 = np.empty_like(t)
    a2 = np.empty_like(t)
    far = t < -30.0
    tn = t[~far]
    lam = np.exp(-0.5 * tn * tn - 0.5 * np.log(2.0 * np.pi) - special.log_ndtr(tn))
    a1[~far] = tn + lam
    a2[~far] = 1.0 + tn * (tn + lam)
    u = -1.0 / t[far]
    u2 = u * u
    s = u * (1.0 + u2 * (-2.0 + u2 * (10.0 + u2 * (-74.0 + u2 * 706.0))))
    a1[far] = s
    # 1 - x s with x = -t
    a2[far] = u2 * (2.0 + u2 * (-10.0 + u2 * (74.0 - u2 * 706.0)))
    return a1, a2
