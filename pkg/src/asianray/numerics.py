"""Scalar numerical kernels: bracketed roots, 1-D minimization, quadrature.

Every solver in the package funnels through these three routines so that
tolerances and failure modes are uniform. All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import DomainError, MaxIterExceeded, NoSignChange

ScalarFn = Callable[[float], float]

_EPS = 2.220446049250313e-16
_GOLDEN = 0.3819660112501051  # (3 - sqrt(5)) / 2


@dataclass(frozen=True)
class Bracket:
    """Closed interval ``[lo, hi]`` with ``lo < hi``."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise DomainError(f"bracket ends must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise DomainError(f"bracket requires lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances shared by the scalar solvers.

    Attributes:
        rel_tol: Relative tolerance on the abscissa (roots, minimizers) or on the
            integral value (quadrature).
        abs_tol: Absolute tolerance. For root finding it is also the residual target.
        max_iter: Iteration budget; for quadrature the maximum bisection depth.
    """

    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")
        if not self.abs_tol >= 0:
            raise DomainError("abs_tol must be non-negative")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")


DEFAULT_CONFIG = SolverConfig()


def find_root(
    f: ScalarFn,
    bracket: Bracket,
    cfg: SolverConfig = DEFAULT_CONFIG,
    fprime: ScalarFn | None = None,
) -> float:
    """Find a root of ``f`` inside a sign-changing bracket.

    Newton steps (when ``fprime`` is given) or secant steps are taken whenever they
    land strictly inside the current bracket; otherwise the bracket is bisected. A
    bisection is also forced whenever two consecutive iterations fail to halve the
    bracket, so the worst case is twice the cost of pure bisection.

    Args:
        f: Continuous function on the bracket.
        bracket: Interval whose endpoints give values of opposite sign.
        cfg: Tolerances. Iteration stops when ``|f(x)| <= abs_tol`` or the bracket
            width is at most ``rel_tol * |x| + abs_tol``.
        fprime: Optional derivative of ``f``.

    Returns:
        The bracket endpoint with the smallest residual at termination.

    Raises:
        NoSignChange: If ``f(lo)`` and ``f(hi)`` share a strict sign.
        MaxIterExceeded: If the budget runs out first.
    """
    a, b = bracket.lo, bracket.hi
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0 or math.isnan(fa) or math.isnan(fb):
        raise NoSignChange(
            "no sign change across bracket", lo=a, hi=b, f_lo=fa, f_hi=fb
        )

    if abs(fa) < abs(fb):
        x, fx, xp, fxp = a, fa, b, fb
    else:
        x, fx, xp, fxp = b, fb, a, fa
    widths = [b - a]

    for _ in range(cfg.max_iter):
        tol = cfg.rel_tol * abs(x) + cfg.abs_tol
        if abs(fx) <= cfg.abs_tol or (b - a) <= tol:
            return a if abs(fa) <= abs(fb) else b

        mid = 0.5 * (a + b)
        cand = math.nan
        if len(widths) >= 3 and widths[-1] > 0.5 * widths[-3]:
            pass  # bracket stalled: fall through to bisection
        elif fprime is not None:
            d = fprime(x)
            if d != 0.0 and math.isfinite(d):
                cand = x - fx / d
        elif fx != fxp:
            cand = x - fx * (x - xp) / (fx - fxp)

        if not (a < cand < b):
            cand = mid
        elif abs(cand - x) < tol:
            # Tiny steps stall one-sided convergence; nudge toward the midpoint.
            cand = x + math.copysign(tol, mid - x)

        fc = f(cand)
        if fc == 0.0:
            return cand
        if (fc > 0.0) == (fa > 0.0):
            a, fa = cand, fc
        else:
            b, fb = cand, fc
        xp, fxp, x, fx = x, fx, cand, fc
        widths.append(b - a)

    raise MaxIterExceeded(
        "find_root did not converge", lo=a, hi=b, f_lo=fa, f_hi=fb, iterations=cfg.max_iter
    )


def minimize_1d(
    f: ScalarFn, bracket: Bracket, cfg: SolverConfig = DEFAULT_CONFIG
) -> tuple[float, float]:
    """Brent's minimizer: golden-section search with parabolic acceleration.

    The endpoints themselves are never evaluated. For a function that is not
    unimodal the result is a local minimum; for a monotone function the result
    sits within tolerance of the lower endpoint, which callers can detect.

    Returns:
        ``(argmin, f(argmin))``.

    Raises:
        MaxIterExceeded: If the bracket did not shrink to tolerance in time.
    """
    a, b = bracket.lo, bracket.hi
    x = w = v = a + _GOLDEN * (b - a)
    fx = fw = fv = f(x)
    d = e = 0.0

    for _ in range(cfg.max_iter):
        xm = 0.5 * (a + b)
        tol1 = cfg.rel_tol * abs(x) + cfg.abs_tol + _EPS * abs(x)
        tol2 = 2.0 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (b - a):
            return x, fx

        use_golden = True
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            e_prev = e
            e = d
            if abs(p) < abs(0.5 * q * e_prev) and q * (a - x) < p < q * (b - x):
                d = p / q
                u = x + d
                if (u - a) < tol2 or (b - u) < tol2:
                    d = math.copysign(tol1, xm - x)
                use_golden = False
        if use_golden:
            e = (b - x) if x < xm else (a - x)
            d = _GOLDEN * e

        u = x + (d if abs(d) >= tol1 else math.copysign(tol1, d))
        fu = f(u)
        if fu <= fx:
            if u < x:
                b = x
            else:
                a = x
            v, fv, w, fw, x, fx = w, fw, x, fx, u, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, fv, w, fw = w, fw, u, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu

    raise MaxIterExceeded("minimize_1d did not converge", argmin=x, value=fx, lo=a, hi=b)


def integrate(
    f: ScalarFn, a: float, b: float, cfg: SolverConfig = DEFAULT_CONFIG
) -> float:
    """Adaptive Simpson quadrature with Richardson correction.

    The tolerance ``rel_tol * |I| + abs_tol`` (with ``I`` the coarse initial
    estimate) is split evenly between the two halves at every bisection. Panels
    whose disagreement is already at rounding level are accepted, so requesting
    tolerances near machine precision does not loop forever.

    Raises:
        MaxIterExceeded: If a panel still fails the test at the depth limit
            ``min(cfg.max_iter, 60)``.
    """
    if a == b:
        return 0.0
    if b < a:
        return -integrate(f, b, a, cfg)

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    # A five-point estimate gives a safer scale for the relative tolerance.
    q1, q3 = f(0.25 * (3 * a + b)), f(0.25 * (a + 3 * b))
    scale = abs((b - a) * (fa + 4 * q1 + 2 * fm + 4 * q3 + fb) / 12.0)
    eps = cfg.rel_tol * scale + cfg.abs_tol
    max_depth = min(cfg.max_iter, 60)
    min_depth = 3

    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, eps, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, s, tol, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) * (flo + 4.0 * flm + fmid) / 6.0
        right = (hi - mid) * (fmid + 4.0 * frm + fhi) / 6.0
        delta = left + right - s
        noise = 64.0 * _EPS * (abs(left) + abs(right))
        if depth >= min_depth and abs(delta) <= max(15.0 * tol, noise):
            total += left + right + delta / 15.0
            continue
        if depth >= max_depth:
            raise MaxIterExceeded(
                "integrate hit the subdivision limit", a=lo, b=hi, depth=depth
            )
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth + 1))
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * tol, depth + 1))
    return total


def exprel(x: float) -> float:
    """``(e^x - 1) / x`` with the removable singularity at zero filled in."""
    if abs(x) < 1e-8:
        return 1.0 + 0.5 * x
    return math.expm1(x) / x


def _sinc_minus_one(z2: float, sign: float) -> float:
    """``sinh(z)/z - 1`` (``sign=1``) or ``sin(z)/z - 1`` (``sign=-1``) from ``z^2``.

    Taylor series, accurate to rounding for ``z^2 < 0.25``.
    """
    term, total = 1.0, 0.0
    for k in range(1, 10):
        term *= sign * z2 / ((2 * k) * (2 * k + 1))
        total += term
    return total


def log_sinhc(beta: float) -> float:
    """``log(sinh(beta) / beta)``, stable for small and very large ``beta``."""
    b = abs(beta)
    if b < 0.5:
        return math.log1p(_sinc_minus_one(b * b, 1.0))
    if b > 20.0:
        return b - math.log(2.0 * b) + math.log1p(-math.exp(-2.0 * b))
    return math.log(math.sinh(b) / b)


def log_sin2c(xi: float) -> float:
    """``log(sin(2 xi) / (2 xi))`` for ``xi`` in ``[0, pi/2)``."""
    if xi < 0.25:
        z = 2.0 * xi
        return math.log1p(_sinc_minus_one(z * z, -1.0))
    # sin(2 xi) = 2 sin(xi) cos(xi) keeps precision as xi -> pi/2.
    return math.log(math.sin(xi)) + math.log(math.cos(xi)) - math.log(xi)
