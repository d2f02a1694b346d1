import math

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from asianray.errors import ConfigError, DomainError, MaxIterExceeded, NoSignChange
from asianray.numerics import (
    DEFAULT_CONFIG,
    Bracket,
    SolverConfig,
    exprel,
    find_root,
    integrate,
    log_sin2c,
    log_sinhc,
    minimize_1d,
)


class TestTypes:
    def test_bracket_order(self):
        with pytest.raises(DomainError):
            Bracket(1.0, 1.0)
        assert Bracket(-1.0, 2.0).width == 3.0

    @pytest.mark.parametrize("kw", [{"rel_tol": 0.0}, {"abs_tol": -1.0}, {"max_iter": 0}])
    def test_config_validation(self, kw):
        with pytest.raises((DomainError, ConfigError)):
            SolverConfig(**kw)

    def test_defaults(self):
        assert (DEFAULT_CONFIG.rel_tol, DEFAULT_CONFIG.abs_tol, DEFAULT_CONFIG.max_iter) == (1e-12, 1e-14, 200)


class TestFindRoot:
    def test_sqrt2(self):
        x = find_root(lambda x: x * x - 2.0, Bracket(1.0, 2.0))
        assert x == pytest.approx(math.sqrt(2.0), abs=1e-14)

    def test_sinhc(self):
        # frozen from a 200-step bisection of the monotone sinh(x)/x
        x = find_root(lambda x: math.sinh(x) / x - 1.2323, Bracket(1e-8, 10.0))
        assert x == pytest.approx(1.1427333944849731, abs=1e-12)

    def test_odd(self):
        assert find_root(lambda x: x, Bracket(-1.0, 1.0)) == pytest.approx(0.0, abs=1e-14)

    def test_with_derivative(self):
        x = find_root(lambda x: math.exp(x) - 3.0, Bracket(0.0, 5.0), fprime=math.exp)
        assert x == pytest.approx(math.log(3.0), abs=1e-14)

    def test_no_sign_change(self):
        with pytest.raises(NoSignChange) as info:
            find_root(lambda x: x * x + 1.0, Bracket(-1.0, 1.0))
        assert info.value.diagnostics["f_lo"] == 2.0

    def test_budget(self):
        with pytest.raises(MaxIterExceeded):
            find_root(lambda x: x**3 - 0.3, Bracket(0.0, 1.0), SolverConfig(1e-15, 0.0, 2))

    @given(
        root=st.floats(-50, 50),
        scale=st.floats(0.1, 10),
        power=st.sampled_from([1, 3, 5]),
    )
    def test_residual_property(self, root, scale, power):
        f = lambda x: scale * (x - root) ** power  # noqa: E731
        x = find_root(f, Bracket(root - 7.3, root + 11.1))
        assert abs(f(x)) <= 10 * DEFAULT_CONFIG.abs_tol or abs(x - root) <= 1e-10 * max(1, abs(root))


class TestMinimize:
    def test_quadratic(self):
        x, fx = minimize_1d(lambda x: (x - 3.0) ** 2, Bracket(0.0, 10.0))
        assert x == pytest.approx(3.0, abs=1e-7)
        assert fx == pytest.approx(0.0, abs=1e-14)

    def test_quartic(self):
        # exact minimiser of x^4 - x is 4^(-1/3)
        x, fx = minimize_1d(lambda x: x**4 - x, Bracket(0.0, 2.0))
        assert x == pytest.approx(4.0 ** (-1.0 / 3.0), abs=1e-7)
        assert fx == pytest.approx(-0.75 * 4.0 ** (-1.0 / 3.0), abs=1e-13)

    def test_abs(self):
        x, fx = minimize_1d(abs, Bracket(-1.0, 1.0))
        assert abs(x) < 1e-10 and fx < 1e-10

    @given(vertex=st.floats(-5, 5), curv=st.floats(0.01, 100), level=st.floats(-10, 10))
    def test_convex_quadratic(self, vertex, curv, level):
        x, fx = minimize_1d(lambda x: curv * (x - vertex) ** 2 + level, Bracket(-10.0, 10.0))
        # the location is limited by the flatness of the minimum, the value is not
        assert fx == pytest.approx(level, abs=1e-12 * max(1.0, abs(level)))
        assert abs(x - vertex) <= 1e-6 * max(1.0, abs(vertex))


class TestIntegrate:
    @pytest.mark.parametrize(
        "f, a, b, expected",
        [
            (lambda t: 1.0, 0.0, 1.0, 1.0),
            (math.exp, 0.0, 1.0, math.e - 1.0),
            (math.sin, 0.0, math.pi, 2.0),
        ],
    )
    def test_closed_forms(self, f, a, b, expected):
        assert integrate(f, a, b) == pytest.approx(expected, rel=1e-12, abs=1e-14)

    def test_reversed_and_empty(self):
        assert integrate(math.exp, 1.0, 0.0) == pytest.approx(1.0 - math.e, rel=1e-12)
        assert integrate(math.exp, 2.0, 2.0) == 0.0

    @given(alpha=st.floats(-5, 5), beta=st.floats(-5, 5), b=st.floats(0.1, 3))
    def test_linearity(self, alpha, beta, b):
        f, g = math.cos, (lambda t: t * t)
        lhs = integrate(lambda t: alpha * f(t) + beta * g(t), 0.0, b)
        rhs = alpha * integrate(f, 0.0, b) + beta * integrate(g, 0.0, b)
        assert abs(lhs - rhs) <= 1e-11 * (1 + abs(alpha) + abs(beta)) * (1 + b**3)


class TestHelpers:
    @pytest.mark.parametrize("x", [-30.0, -1.0, -1e-10, 0.0, 1e-10, 0.5, 30.0])
    def test_exprel(self, x):
        expected = 1.0 if x == 0 else math.expm1(x) / x
        assert exprel(x) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("b", [1e-6, 1e-3, 0.5, 5.0, 25.0, 400.0])
    def test_log_sinhc(self, b):
        mpmath.mp.dps = 50

        assert log_sinhc(b) == pytest.approx(float(mpmath.log(mpmath.sinh(b) / b)), rel=1e-12, abs=1e-18)

    @pytest.mark.parametrize("xi", [1e-6, 1e-3, 0.4, 1.2, 1.5707963])
    def test_log_sin2c(self, xi):
        mpmath.mp.dps = 50

        expected = float(mpmath.log(mpmath.sin(2 * mpmath.mpf(xi)) / (2 * mpmath.mpf(xi))))
        assert log_sin2c(xi) == pytest.approx(expected, rel=1e-9, abs=1e-18)
