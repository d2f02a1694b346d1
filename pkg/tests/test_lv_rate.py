import math

import numpy as np
import pytest

from asianray.bs_rate import j_bs, solve_fwd_rate
from asianray.domain_model import Constant, LocalVol, ModelSpec, clamped_cev, shifted_reciprocal
from asianray.errors import DomainError
from asianray.lv_rate import (
    InnerProblem,
    Kind,
    f_inverse,
    f_transform,
    fwd_rate,
    inner_rate,
    path_energy,
)

S0 = 100.0
SMILE = ModelSpec(S0, vol=shifted_reciprocal(0.2, 0.1, S0))
CLAMPED = ModelSpec(S0, vol=clamped_cev(0.3, 0.5, S0, 0.15, 0.5))


def smooth_vol():
    return LocalVol(lambda s: 0.2 + 0.1 / (1.0 + s / S0), 0.2, 0.3)


def outer_objective(model, k, tau, kind, c, n_grid):
    y = f_inverse(model, c * tau)
    x = model.s0 * math.exp(y)
    target = k / x if kind is Kind.FIXED_AVERAGE else k
    value, _ = inner_rate(InnerProblem(x, target, kind, n_grid), model)
    return 0.5 * c * c * tau + value / (1.0 - tau)


class TestTransform:
    def test_constant(self):
        m = ModelSpec(S0, vol=Constant(0.25))
        assert f_transform(m, 0.7) == pytest.approx(0.7 / 0.25, rel=1e-15)
        assert f_inverse(m, 2.8) == pytest.approx(0.7, rel=1e-15)

    def test_zero(self):
        m = ModelSpec(S0, vol=smooth_vol())
        assert f_transform(m, 0.0) == 0.0 and f_inverse(m, 0.0) == 0.0

    def test_against_riemann_sum(self):
        m = ModelSpec(S0, vol=smooth_vol())
        n = 1_000_000
        z = (np.arange(n) + 0.5) / n
        riemann = float(np.sum(1.0 / (0.2 + 0.1 / (1.0 + np.exp(z))))) / n
        assert f_transform(m, 1.0) == pytest.approx(riemann, abs=1e-10)

    @pytest.mark.parametrize("model", [ModelSpec(S0, vol=smooth_vol()), SMILE, CLAMPED])
    @pytest.mark.parametrize("y", [-2.0, -1.0, 0.5, 2.0])
    def test_round_trip(self, model, y):
        assert f_inverse(model, f_transform(model, y)) == pytest.approx(y, abs=1e-10)

    @pytest.mark.parametrize("v", [0.3, -1.7])
    def test_flat_local_vol_inverse(self, v):
        # sigma_lo == sigma_hi gives a zero-width starting bracket
        m = ModelSpec(S0, vol=shifted_reciprocal(0.3, 0.0, S0))
        assert f_inverse(m, v) == pytest.approx(0.3 * v, rel=1e-10)

    def test_increasing(self):
        ys = np.linspace(-3, 3, 13)
        vals = [f_transform(SMILE, y) for y in ys]
        assert np.all(np.diff(vals) > 0)


class TestInnerProblem:
    def test_validation(self):
        with pytest.raises(DomainError):
            InnerProblem(0.0, 1.0, Kind.FIXED_AVERAGE)
        with pytest.raises(DomainError):
            InnerProblem(1.0, 1.0, Kind.FIXED_AVERAGE, n_grid=2)

    def test_flat_path_when_target_is_one(self):
        value, phi = inner_rate(InnerProblem(S0, 1.0, Kind.FIXED_AVERAGE), SMILE)
        assert value == 0.0 and not phi.any()

    @pytest.mark.parametrize("kind", list(Kind))
    def test_constant_vol_reduces_to_asian(self, kind):
        sigma = 0.3
        value, _ = inner_rate(InnerProblem(S0, 1.2, kind, 256), ModelSpec(S0, vol=Constant(sigma)))
        assert sigma**2 * value == pytest.approx(0.04813, abs=5e-4)
        assert sigma**2 * value == pytest.approx(j_bs(1.2), rel=1e-5)

    def test_floating_put_side(self):
        value, _ = inner_rate(InnerProblem(S0, 0.8, Kind.FLOATING_AVERAGE, 256), ModelSpec(S0, vol=Constant(1.0)))
        assert value == pytest.approx(j_bs(0.8), rel=1e-5)


class TestFwdRate:
    def test_constant_call_example(self):
        sigma = 0.4
        res = fwd_rate(ModelSpec(S0, vol=Constant(sigma)), 150.0, 0.25)
        assert res.i_fwd == pytest.approx(0.16109 / sigma**2, abs=1e-3 / sigma**2)
        assert res.c_star * sigma == pytest.approx(0.786554, abs=1e-4)

    def test_at_the_money(self):
        res = fwd_rate(SMILE, S0, 0.4)
        assert res.i_fwd == pytest.approx(0.0, abs=1e-14)
        assert res.c_star == pytest.approx(0.0, abs=1e-6)

    def test_floating_flat_first_leg(self):
        sigma = 0.3
        res = fwd_rate(ModelSpec(S0, vol=Constant(sigma)), 0.8, 0.5, Kind.FLOATING_AVERAGE)
        assert res.i_fwd == pytest.approx(0.07823 / (0.5 * sigma**2), abs=2e-3 / sigma**2)
        assert res.c_star == pytest.approx(0.0, abs=1e-5)

    def test_invariant_identity(self):
        res = fwd_rate(SMILE, 130.0, 0.5)
        assert res.i_fwd == 0.5 * res.c_star**2 * 0.5 + res.inner_value / 0.5

    def test_local_vol_self_convergence(self):
        # no closed form: successive refinements must shrink by about 4 and the
        # extrapolated value must agree with the frozen reference to 3 digits
        vals = [fwd_rate(SMILE, 130.0, 0.5, n_grid=n).i_fwd for n in (64, 128, 256)]
        d1, d2 = vals[0] - vals[1], vals[1] - vals[2]
        assert d1 / d2 == pytest.approx(4.0, rel=0.1)
        extrapolated = vals[2] - d2 / 3
        assert extrapolated == pytest.approx(0.62184614, rel=1e-6)
        assert vals[2] == pytest.approx(0.6218466829174, rel=1e-9)

    def test_local_minimum_and_global_scan(self):
        n = 128
        res = fwd_rate(SMILE, 130.0, 0.5, n_grid=n)
        c = res.c_star
        for delta in (-1e-3, 1e-3):
            assert outer_objective(SMILE, 130.0, 0.5, Kind.FIXED_AVERAGE, c + delta, n) >= res.i_fwd
        coarse = [outer_objective(SMILE, 130.0, 0.5, Kind.FIXED_AVERAGE, cc, n)
                  for cc in np.linspace(-1.0, 3.0, 9)]
        assert min(coarse) >= res.i_fwd - 1e-12

    @pytest.mark.parametrize("k, kind", [(130.0, Kind.FIXED_AVERAGE), (75.0, Kind.FIXED_AVERAGE),
                                         (1.2, Kind.FLOATING_AVERAGE), (0.85, Kind.FLOATING_AVERAGE)])
    def test_path_invariants(self, k, kind):
        n = 128
        res = fwd_rate(CLAMPED, k, 0.4, kind, n)
        assert res.corner_slope_gap <= 5.0 / n
        assert abs(res.path.constraint_residual) <= 1e-8
        plain, scaled = path_energy(res.path, CLAMPED)
        assert plain / CLAMPED.vol.sigma_hi**2 <= res.i_fwd <= plain / CLAMPED.vol.sigma_lo**2
        assert scaled == pytest.approx(res.i_fwd, rel=5e-3)

    @pytest.mark.parametrize("lam", [0.01, 3.0])
    def test_scale_covariance(self, lam):
        base = fwd_rate(ModelSpec(S0, vol=Constant(0.3)), 120.0, 0.5, n_grid=64)
        scaled = fwd_rate(ModelSpec(lam * S0, vol=Constant(0.3)), lam * 120.0, 0.5, n_grid=64)
        assert scaled.i_fwd == pytest.approx(base.i_fwd, rel=1e-10)
        lv = fwd_rate(ModelSpec(S0, vol=shifted_reciprocal(0.2, 0.1, S0)), 120.0, 0.5, n_grid=64)
        lv_scaled = fwd_rate(ModelSpec(lam * S0, vol=shifted_reciprocal(0.2, 0.1, lam * S0)),
                             lam * 120.0, 0.5, n_grid=64)
        assert lv_scaled.i_fwd == pytest.approx(lv.i_fwd, rel=1e-8)

    @pytest.mark.parametrize("k, tau", [(1.3, 0.5), (0.6, 0.25)])
    def test_constant_vol_second_order(self, k, tau):
        exact = solve_fwd_rate(k, tau, 0.3).i_fwd
        errs = [abs(fwd_rate(ModelSpec(S0, vol=Constant(0.3)), k * S0, tau, n_grid=n).i_fwd - exact)
                for n in (64, 128)]
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)

    def test_domain(self):
        with pytest.raises(DomainError):
            fwd_rate(SMILE, -1.0, 0.5)
        with pytest.raises(DomainError):
            fwd_rate(SMILE, 100.0, 1.0)
