import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from capacity_lab.model import ConvergenceError, ModelPoint, RegimeError, SolverOptions
from capacity_lab.subcritical import entropy_subcritical
from capacity_lab.supercritical import (capacity_vs, entropy_supercritical,
                                        solve_branch, solve_supercritical,
                                        supercritical_residuals)

RHO, ALPHA = 0.5, 1.3


@pytest.fixture(scope="module")
def sol():
    point = ModelPoint(RHO, ALPHA)
    return point, solve_supercritical(point)


def dz(f, lo=-10.0, hi=10.0, points=None):
    return integrate.quad(lambda t: f(t) * stats.norm.pdf(t), lo, hi,
                          epsabs=1e-13, epsrel=1e-11, limit=300, points=points)[0]


def test_equations_against_nested_quadrature(sol):
    point, p = sol
    rho, alpha = point.rho, point.alpha
    S = rho - p.q0

    def h_moments(z):
        B = math.sqrt(p.q0) * z
        y0 = -B / math.sqrt(S)
        v = lambda y: math.sqrt(S) * y + B  # noqa: E731
        ht = lambda y: math.exp(-v(y) ** 2 / (2 * p.chi))  # noqa: E731
        neg = stats.norm.cdf(y0)
        m = [dz(lambda y: ht(y) * v(y) ** k, y0, y0 + 12) for k in range(3)]
        return neg + m[0], m[1], m[2]

    def xi_moments(z):
        a2, c = p.F1 - p.F0, math.sqrt(p.F0) * z
        h = lambda y: math.sqrt(a2) * y + c  # noqa: E731
        w = lambda y: math.exp(h(y) ** 2 / (2 * p.E) - y * y / 2) / math.sqrt(2 * math.pi)  # noqa: E731
        return [integrate.quad(lambda y: w(y) * h(y) ** k, -40, 40, epsabs=0,
                               epsrel=1e-12, limit=200)[0] for k in range(3)]

    def hs(z):
        I0, I1, I2 = h_moments(z)
        return I1 / I0, I2 / I0

    F1 = alpha / p.chi ** 2 * dz(lambda z: hs(z)[1])
    F0 = alpha / p.chi ** 2 * dz(lambda z: hs(z)[0] ** 2)
    assert p.F1 == pytest.approx(F1, rel=1e-7)
    assert p.F0 == pytest.approx(F0, rel=1e-7)

    def occ(z):
        J0, J1, J2 = xi_moments(z)
        s = special.expit(math.log(J0) - p.K)
        return s, s * J1 / J0, s * J2 / J0

    assert dz(lambda z: occ(z)[0]) == pytest.approx(rho, rel=1e-8)
    assert dz(lambda z: occ(z)[2]) / p.E ** 2 == pytest.approx(rho, rel=1e-7)
    assert dz(lambda z: occ(z)[1] ** 2) / p.E ** 2 == pytest.approx(p.q0, rel=1e-7)
    assert p.E == pytest.approx(rho / p.chi, rel=1e-14)


def test_residuals_and_entropy(sol):
    point, p = sol
    assert np.abs(supercritical_residuals(p, point)).max() < 1e-9
    assert entropy_supercritical(p, point) == pytest.approx(p.Sigma, abs=1e-12)
    assert 0 < p.Sigma < entropy_subcritical(RHO)
    assert 0 <= p.F0 <= p.F1 < p.E


def test_warm_start_reproduces(sol):
    point, p = sol
    q = solve_supercritical(ModelPoint(RHO, ALPHA + 0.01), warm_start=p)
    assert q.Sigma < p.Sigma
    assert abs(q.q0 - p.q0) < 0.02


def test_entropy_continuous_at_transition():
    p = solve_supercritical(ModelPoint(0.5, 1.0 * (1 + 1e-3)))
    assert abs(p.Sigma - math.log(2)) < 1e-2
    # chi diverges like 1/offset near the transition
    assert p.chi > 10


def test_branch_profile_decreasing():
    alphas = [1.05, 1.2, 1.4, 1.6]
    res = solve_branch(0.5, alphas)
    sig = [r.Sigma for r in res]
    assert all(a > b for a, b in zip(sig, sig[1:]))
    chi = [r.chi for r in res]
    assert all(a > b for a, b in zip(chi, chi[1:]))


def test_branch_records_errors():
    res = solve_branch(0.5, [0.9, 1.1])
    assert isinstance(res[0], RegimeError)
    assert res[1].residual < 1e-10
    with pytest.raises(ValueError):
        solve_branch(0.5, [1.2, 1.1])


def test_regime_errors():
    with pytest.raises(RegimeError):
        solve_supercritical(ModelPoint(0.5, 0.9))
    with pytest.raises(ValueError):
        solve_supercritical(ModelPoint(1.0, 2.5))
    with pytest.raises(ValueError):
        capacity_vs(1.0)


@pytest.mark.parametrize("rho", [0.3, 0.5])
def test_capacity(rho):
    res = capacity_vs(rho)
    assert res.alpha_cg == 2 * rho
    assert abs(res.sigma_residual) < 1e-8
    # above the fixed-subset load, below the capacity of the full perceptron
    assert 2 * rho < res.alpha_vs < 2.0
    lo, hi = res.bracket
    assert lo <= res.alpha_vs <= hi and hi - lo < 1e-4


def test_capacity_regression_value():
    # regression against an earlier run with a plain alpha bisection
    assert capacity_vs(0.5).alpha_vs == pytest.approx(1.7964865, abs=1e-6)


def test_capacity_scan_limit():
    with pytest.raises(ConvergenceError) as exc:
        capacity_vs(0.5, opts=SolverOptions(alpha_scan_max=1.3))
    assert exc.value.trace


def test_warm_start_independence():
    target = ModelPoint(0.5, 1.2)
    a, b = solve_branch(0.5, [1.15, 1.3])
    pa = solve_supercritical(target, warm_start=a)
    pb = solve_supercritical(target, warm_start=b)
    for f in ("q0", "chi", "F1", "F0", "E", "K", "Sigma"):
        assert getattr(pa, f) == pytest.approx(getattr(pb, f), abs=1e-6)


@pytest.mark.slow
def test_capacity_approaches_two_as_rho_goes_to_one():
    vs = [capacity_vs(r).alpha_vs for r in (0.7, 0.95, 0.99)]
    assert vs[0] < vs[1] < vs[2] < 2.0
    assert 2.0 - vs[2] < 0.05
