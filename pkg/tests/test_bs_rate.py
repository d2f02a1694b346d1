import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import simpson
from scipy.optimize import minimize

from asianray.bs_rate import (
    Branch,
    _beta_equation,
    _xi_equation,
    asian_leg,
    asian_leg_slope,
    j_bs,
    optimal_path,
    solve_fwd_rate,
)
from asianray.errors import DomainError

K_GRID = [0.5, 0.6, 0.7, 0.8, 0.9, 1.1, 1.2, 1.3, 1.4, 1.5]
TAU_GRID = [0.0, 0.25, 0.5, 0.75, 0.9]


def brute_force_rate(k, tau, n):
    """Direct minimisation of the piecewise-linear action on an n-interval grid."""
    h = 1.0 / n
    start = int(round(tau * n))

    def action(x):
        d = np.diff(np.concatenate(([0.0], x))) / h
        return 0.5 * np.sum(d * d) * h

    def grad(x):
        d = np.diff(np.concatenate(([0.0], x))) / h
        g = np.zeros(n + 1)
        g[1:] += d
        g[:-1] -= d
        return g[1:]

    def constraint(x):
        e = np.exp(np.concatenate(([0.0], x))[start:])
        return (np.sum(e) - 0.5 * (e[0] + e[-1])) * h / (1.0 - tau) - k

    x0 = math.log(k) * np.linspace(h, 1.0, n)
    res = minimize(action, x0, jac=grad, method="SLSQP",
                   constraints=[{"type": "eq", "fun": constraint}],
                   options={"ftol": 1e-15, "maxiter": 1000})
    return res.fun


class TestJbs:
    def test_atm(self):
        assert j_bs(1.0) == 0.0

    @pytest.mark.parametrize("x, beta, j", [(1.2, 1.06487, 0.04813), (1.3, 1.2873, 0.09818)])
    def test_call_side(self, x, beta, j):
        assert j_bs(x) == pytest.approx(j, abs=5e-6)
        assert solve_fwd_rate(x, 0.0).beta_or_xi == pytest.approx(beta, abs=5e-6)

    def test_put_side(self):
        res = solve_fwd_rate(0.8, 0.0)
        assert res.side is Branch.XI
        assert res.beta_or_xi == pytest.approx(0.56555, abs=5e-6)
        assert j_bs(0.8) == pytest.approx(0.07823, abs=5e-6)

    def test_closed_form_at_root(self):
        # at tau = 0 the rate is beta^2/2 - beta tanh(beta/2) and 2 xi (tan xi - xi)
        b = solve_fwd_rate(1.4, 0.0).beta_or_xi
        assert j_bs(1.4) == pytest.approx(0.5 * b * b - b * math.tanh(0.5 * b), rel=1e-13)
        z = solve_fwd_rate(0.6, 0.0).beta_or_xi
        assert j_bs(0.6) == pytest.approx(2 * z * (math.tan(z) - z), rel=1e-13)

    @pytest.mark.parametrize("x", [0.0, -1.0])
    def test_domain(self, x):
        with pytest.raises(DomainError):
            j_bs(x)


class TestSolveFwdRate:
    def test_call_example(self):
        res = solve_fwd_rate(1.5, 0.25, 0.4)
        assert res.c == pytest.approx(0.786554, abs=5e-6)
        assert res.beta_or_xi == pytest.approx(1.14257, abs=5e-6)
        assert res.j_fwd == pytest.approx(0.16109, abs=5e-5)
        assert res.i_fwd == pytest.approx(res.j_fwd / 0.16, rel=1e-14)

    def test_put_example(self):
        res = solve_fwd_rate(0.7, 0.5)
        assert (res.c, res.beta_or_xi, res.j_fwd) == pytest.approx((-0.538556, 0.358898, 0.09584), abs=5e-6)

    @pytest.mark.parametrize("tau", [0.0, 0.3, 0.9])
    def test_atm_zero(self, tau):
        res = solve_fwd_rate(1.0, tau)
        assert res.j_fwd == res.c == res.beta_or_xi == 0.0

    def test_near_european_limit(self):
        assert solve_fwd_rate(1.5, 0.999).j_fwd == pytest.approx(0.5 * math.log(1.5) ** 2, abs=1e-3)

    @pytest.mark.parametrize("k, tau", [(0.0, 0.5), (1.2, 1.0), (1.2, -0.1)])
    def test_domain(self, k, tau):
        with pytest.raises(DomainError):
            solve_fwd_rate(k, tau)

    @pytest.mark.parametrize("k", K_GRID)
    @pytest.mark.parametrize("tau", TAU_GRID)
    def test_equation_residual_and_slope(self, k, tau):
        res = solve_fwd_rate(k, tau)
        log_k = math.log(k)
        p = res.beta_or_xi
        if res.side is Branch.BETA:
            assert abs(_beta_equation(p, tau, log_k)) < 1e-10
            assert res.c == pytest.approx(p * math.tanh(p / 2) / (1 - tau), abs=1e-10)
        else:
            assert abs(_xi_equation(p, tau, log_k)) < 1e-10
            assert res.c == pytest.approx(-2 * p * math.tan(p) / (1 - tau), abs=1e-10)

    @pytest.mark.parametrize("k", [0.3, 0.8, 1.2, 2.5, 10.0])
    def test_zero_tau_reduces_to_asian(self, k):
        assert solve_fwd_rate(k, 0.0, 0.3).j_fwd == pytest.approx(j_bs(k), abs=1e-12)

    @pytest.mark.parametrize("k", [0.6, 1.4])
    def test_monotone_european_limit(self, k):
        target = 0.5 * math.log(k) ** 2
        gaps = [abs(solve_fwd_rate(k, 1 - 10.0**-p).j_fwd - target) for p in range(1, 5)]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-3

    @given(k=st.floats(0.2, 5.0), tau=st.floats(0.0, 0.97))
    def test_structural_invariants(self, k, tau):
        res = solve_fwd_rate(k, tau)
        log_k = math.log(k)
        assert res.j_fwd >= 0
        if abs(log_k) < 1e-9:
            return
        assert res.j_fwd > 0
        assert math.copysign(1, res.c) == math.copysign(1, log_k)
        # the window start level lies between the spot and the strike
        level = res.c * tau
        assert min(0.0, log_k) - 1e-12 <= level <= max(0.0, log_k) + 1e-12

    @given(k1=st.floats(1.01, 3.0), k2=st.floats(1.01, 3.0), tau=st.floats(0.0, 0.9))
    def test_monotone_in_strike(self, k1, k2, tau):
        lo, hi = sorted((k1, k2))
        assert solve_fwd_rate(lo, tau).j_fwd <= solve_fwd_rate(hi, tau).j_fwd + 1e-15

    @pytest.mark.parametrize("k, tau", [(1.5, 0.25), (0.7, 0.5), (1.2, 0.0), (0.6, 0.75)])
    def test_brute_force_oracle(self, k, tau):
        j = solve_fwd_rate(k, tau).j_fwd
        e32 = brute_force_rate(k, tau, 32) - j
        e64 = brute_force_rate(k, tau, 64) - j
        assert 0 < e32 < 2 * j / 32**2
        assert e64 == pytest.approx(e32 / 4, rel=0.05)


class TestAsianLeg:
    @pytest.mark.parametrize("branch, p", [(Branch.BETA, 0.8), (Branch.BETA, 60.0), (Branch.XI, 0.5), (Branch.XI, 1.5)])
    def test_boundary_conditions(self, branch, p):
        u = np.linspace(0, 1, 2001)
        phi = asian_leg(u, branch, p)
        slope = asian_leg_slope(u, branch, p)
        assert phi[0] == pytest.approx(0.0, abs=1e-13)
        assert slope[-1] == pytest.approx(0.0, abs=1e-13)
        np.testing.assert_allclose(np.gradient(phi, u, edge_order=2)[5:-5], slope[5:-5], rtol=1e-4, atol=1e-5)

    def test_beta_leg_matches_direct_formula(self):
        u = np.linspace(0, 1, 11)
        b = 1.3
        direct = b * u - 2 * np.log((np.exp(b * u) + np.exp(b)) / (1 + np.exp(b)))
        np.testing.assert_allclose(asian_leg(u, Branch.BETA, b), direct, rtol=1e-13, atol=1e-15)


class TestOptimalPath:
    def test_flat_at_the_money(self):
        path = optimal_path(1.0, 0.4, 16)
        assert np.all(path.values == 0.0)

    def test_example(self):
        path = optimal_path(1.5, 0.5, 256)
        i = int(np.searchsorted(path.grid, 0.5))
        assert path.grid[i] == path.grid[i + 1] == 0.5
        assert path.values[i] == pytest.approx(0.603527 * 0.5, abs=5e-6)
        assert abs(path.constraint_residual) < 1e-10

    def test_domain(self):
        with pytest.raises(DomainError):
            optimal_path(1.2, 0.5, 2)

    @pytest.mark.parametrize("k", K_GRID)
    @pytest.mark.parametrize("tau", [0.0, 0.25, 0.5, 0.75])
    def test_path_invariants(self, k, tau):
        path = optimal_path(k, tau, 256)
        j = solve_fwd_rate(k, tau).j_fwd
        assert path.values[0] == 0.0
        diffs = np.diff(path.values)
        assert np.all(diffs >= -1e-15) if k > 1 else np.all(diffs <= 1e-15)
        assert abs(path.constraint_residual) < 1e-8
        assert path.corner_slope_gap <= 1e-8 * max(1.0, abs(solve_fwd_rate(k, tau).c))
        # energy by Simpson on each leg of the exact slope samples
        energy = 0.0
        split = np.flatnonzero(np.diff(path.grid) == 0)
        for idx in np.split(np.arange(len(path.grid)), split + 1):
            t, s = path.grid[idx], path.slopes[idx]
            energy += 0.5 * simpson(s * s, x=t)
        assert energy == pytest.approx(j, rel=1e-6)
