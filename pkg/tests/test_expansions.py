import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from asianray.bs_rate import j_bs, solve_fwd_rate
from asianray.errors import DomainError
from asianray.expansions import (
    RegionLabel,
    aatm_rate,
    classify_region,
    dotm_call_rate,
    dotm_put_rate,
)


def exact(x, tau, sigma=1.0):
    return solve_fwd_rate(math.exp(x), tau, sigma).i_fwd


class TestClassifyRegion:
    def test_aatm(self):
        reg = classify_region(0.05, 0.5)
        assert reg.label is RegionLabel.TAU_AATM
        assert reg.scale == pytest.approx(0.025)

    def test_put_region_1(self):
        reg = classify_region(-5.0, 0.01)
        assert reg.label is RegionLabel.TAU_DOTM_PUT_REGION1
        assert reg.kappa_ratio == pytest.approx(0.0202 / 0.0337, rel=2e-3)

    def test_put_region_2(self):
        assert classify_region(-5.0, 0.5).label is RegionLabel.TAU_DOTM_PUT_REGION2

    def test_call_wing_and_intermediate(self):
        assert classify_region(3.0, 0.25).label is RegionLabel.TAU_DOTM_CALL_WING
        assert classify_region(3.0, 0.25).kappa_ratio is None
        assert classify_region(1.0, 0.25).label is RegionLabel.INTERMEDIATE

    def test_thresholds_are_parameters(self):
        assert classify_region(1.0, 0.0, aatm_threshold=1.0).label is RegionLabel.TAU_AATM
        assert classify_region(1.0, 0.0, dotm_threshold=0.5).label is RegionLabel.TAU_DOTM_CALL_WING

    @pytest.mark.parametrize("tau", [-0.1, 1.0])
    def test_domain(self, tau):
        with pytest.raises(DomainError):
            classify_region(0.1, tau)

    @given(x=st.floats(0.001, 20), growth=st.floats(1.0, 10.0), tau=st.floats(0, 0.99),
           sign=st.sampled_from([1.0, -1.0]))
    def test_monotone_in_abs_x(self, x, growth, tau, sign):
        near = classify_region(sign * x, tau).label
        far = classify_region(sign * x * growth, tau).label
        if near is not RegionLabel.TAU_AATM:
            assert far is not RegionLabel.TAU_AATM
        if near not in (RegionLabel.TAU_AATM, RegionLabel.INTERMEDIATE):
            assert far not in (RegionLabel.TAU_AATM, RegionLabel.INTERMEDIATE)


class TestAatmRate:
    def test_zero(self):
        assert aatm_rate(0.0, 0.3) == 0.0

    @given(x=st.floats(-1, 1))
    def test_tau_zero_polynomial(self, x):
        expected = 1.5 * x**2 - 0.3 * x**3 + 109.0 / 1400.0 * x**4
        assert aatm_rate(x, 0.0) == pytest.approx(expected, rel=1e-13, abs=1e-300)

    @pytest.mark.parametrize("x", [0.05, -0.05])
    @pytest.mark.parametrize("tau", [0.25, 0.5])
    def test_matches_exact(self, x, tau):
        assert aatm_rate(x, tau) == pytest.approx(exact(x, tau), rel=1e-4)

    @pytest.mark.parametrize("tau", [0.25, 0.5])
    @pytest.mark.parametrize("x", [0.2, 0.1, 0.05])
    def test_fifth_order_remainder(self, x, tau):
        e_full = abs(aatm_rate(x, tau) - exact(x, tau))
        e_half = abs(aatm_rate(x / 2, tau) - exact(x / 2, tau))
        assert e_full / e_half >= 2**4 * 0.8

    def test_european_limit(self):
        assert aatm_rate(0.1, 0.999) / (0.5 * 0.1**2) == pytest.approx(1.0, rel=1e-2)

    def test_sigma_scaling(self):
        assert aatm_rate(0.1, 0.3, 0.4) == pytest.approx(aatm_rate(0.1, 0.3) / 0.16, rel=1e-14)


class TestDotmCallRate:
    def test_formula_value(self):
        lg = math.log(20.0)
        expected = 0.5 * (100 + 20 * lg - 20 + lg * lg)
        assert dotm_call_rate(10.0, 0.0) == pytest.approx(expected, rel=1e-15)
        assert expected == pytest.approx(74.45, abs=1e-2)

    def test_vs_exact_tau_zero(self):
        assert dotm_call_rate(10.0, 0.0) == pytest.approx(exact(10.0, 0.0), rel=2e-2)

    def test_vs_exact_x5(self):
        assert dotm_call_rate(5.0, 0.5) == pytest.approx(exact(5.0, 0.5), rel=5e-2)

    def test_error_decreasing(self):
        errs = [abs(dotm_call_rate(x, 0.5) / exact(x, 0.5) - 1) for x in (3, 5, 8, 12)]
        assert all(a > b for a, b in zip(errs, errs[1:]))

    def test_quadratic_growth(self):
        ratios = [dotm_call_rate(x, 0.2, 0.5) / (x * x / 0.5) for x in (1e2, 1e4, 1e6)]
        assert abs(ratios[-1] - 1) < abs(ratios[0] - 1)
        assert ratios[-1] == pytest.approx(1.0, rel=1e-4)

    def test_domain(self):
        with pytest.raises(DomainError):
            dotm_call_rate(-1.0, 0.0)


class TestDotmPutRate:
    def test_tau_zero_limit(self):
        value, region = dotm_put_rate(-6.0, 0.0)
        assert value == pytest.approx(2 * (math.exp(6.0) - math.pi**2 / 4 - 1), rel=1e-14)
        assert region.label is RegionLabel.TAU_DOTM_PUT_REGION1

    @pytest.mark.parametrize("x, rel", [(-6.0, 5e-3), (-10.0, 1e-4)])
    def test_tau_zero_vs_exact(self, x, rel):
        assert dotm_put_rate(x, 0.0)[0] == pytest.approx(j_bs(math.exp(x)), rel=rel)

    def test_region_dispatch(self):
        assert dotm_put_rate(-6.0, 0.001)[1].label is RegionLabel.TAU_DOTM_PUT_REGION1
        assert dotm_put_rate(-6.0, 0.5)[1].label is RegionLabel.TAU_DOTM_PUT_REGION2

    def test_region_2_converges_slowly(self):
        # the relative error shrinks along the wing even though it stays large at x=-6
        errs = [abs(dotm_put_rate(x, 0.5)[0] / exact(x, 0.5) - 1) for x in (-6.0, -10.0, -15.0)]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 0.05

    def test_sigma_scaling(self):
        a, _ = dotm_put_rate(-6.0, 0.5, 0.5)
        b, _ = dotm_put_rate(-6.0, 0.5)
        assert a == pytest.approx(4 * b, rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            dotm_put_rate(0.5, 0.2)
