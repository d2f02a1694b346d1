"""Closed-form Black-Scholes rate functions for fixed strike forward start Asians.

With ``x = K/S0``, the optimal log-price path is linear with slope ``c`` up to the
start of the averaging window and then follows the standard Asian optimal path.
Eliminating ``c`` leaves one monotone scalar equation:

* ``K > S0`` (beta branch): ``log(sinh b / b) + tau/(1-tau) b tanh(b/2) = log x``
* ``K < S0`` (xi branch): ``log(sin 2z / 2z) - 2 tau/(1-tau) z tan z = log x``

Rates here are dimensionless (``J``); divide by ``sigma^2`` for ``I``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConvergenceError, DomainError
from .numerics import Bracket, SolverConfig, find_root, log_sin2c, log_sinhc

ATM_LOG_TOL = 1e-9
_XI_MAX = 0.5 * math.pi - 1e-12
_ROOT_CFG = SolverConfig(rel_tol=1e-15, abs_tol=1e-15, max_iter=400)


class Branch(str, Enum):
    BETA = "BetaBranch"
    XI = "XiBranch"


@dataclass(frozen=True)
class BsRateResult:
    """Solution of the forward start rate problem under constant volatility.

    Attributes:
        j_fwd: Dimensionless rate.
        i_fwd: ``j_fwd / sigma^2``.
        c: Slope of the log-path before the averaging window.
        beta_or_xi: Branch parameter (``beta >= 0`` or ``xi`` in ``[0, pi/2)``).
        side: Which branch was solved.
        residual: Residual of the scalar equation at the returned parameter.
        tau: Forward start fraction.
        k_over_s0: Normalized strike.
    """

    j_fwd: float
    i_fwd: float
    c: float
    beta_or_xi: float
    side: Branch
    residual: float
    tau: float
    k_over_s0: float


# Elementary pieces -----------------------------------------------------------


def _beta_equation(beta: float, tau: float, log_k: float) -> float:
    return log_sinhc(beta) + tau / (1.0 - tau) * beta * math.tanh(0.5 * beta) - log_k


def _xi_equation(xi: float, tau: float, log_k: float) -> float:
    return log_sin2c(xi) - 2.0 * tau / (1.0 - tau) * xi * math.tan(xi) - log_k


def _solve_beta(log_k: float, tau: float) -> float:
    hi = 1.0
    while _beta_equation(hi, tau, log_k) < 0.0:
        hi *= 2.0
        if hi > 1e6:
            raise ConvergenceError("beta bracket search diverged", log_k=log_k, tau=tau)
    return find_root(lambda b: _beta_equation(b, tau, log_k), Bracket(0.0, hi), _ROOT_CFG)


def _solve_xi(log_k: float, tau: float) -> float:
    g = lambda z: _xi_equation(z, tau, log_k)  # noqa: E731
    if g(_XI_MAX) > 0.0:
        raise ConvergenceError("xi equation has no root below pi/2", log_k=log_k, tau=tau)
    return find_root(g, Bracket(0.0, _XI_MAX), _ROOT_CFG)


def beta_rate(beta: float, tau: float) -> tuple[float, float]:
    """``(c, J)`` on the beta branch for a given ``beta``."""
    th = math.tanh(0.5 * beta)
    c = beta * th / (1.0 - tau)
    j = (tau * beta**2 * th**2 + (1.0 - tau) * beta**2 - 2.0 * (1.0 - tau) * beta * th) / (
        2.0 * (1.0 - tau) ** 2
    )
    return c, j


def xi_rate(xi: float, tau: float) -> tuple[float, float]:
    """``(c, J)`` on the xi branch for a given ``xi``."""
    t = math.tan(xi)
    c = -2.0 * xi * t / (1.0 - tau)
    j = 2.0 * (tau * xi**2 * t**2 - (1.0 - tau) * xi**2 + (1.0 - tau) * xi * t) / (1.0 - tau) ** 2
    return c, j


# Public API ------------------------------------------------------------------


def solve_fwd_rate(k_over_s0: float, tau: float, sigma: float = 1.0) -> BsRateResult:
    """Rate function of a fixed strike forward start Asian option.

    Args:
        k_over_s0: Strike over spot, positive.
        tau: Forward start fraction in ``[0, 1)``.
        sigma: Constant volatility used for ``i_fwd``.

    Returns:
        The solved rate, slope and branch parameter. Strikes within ``1e-9`` in log
        of the spot return the exact zero solution.

    Raises:
        DomainError: For non-positive strikes or ``tau`` outside ``[0, 1)``.
        ConvergenceError: If the scalar equation cannot be bracketed.
    """
    if not k_over_s0 > 0:
        raise DomainError(f"k_over_s0 must be positive, got {k_over_s0}")
    if not 0.0 <= tau < 1.0:
        raise DomainError(f"tau must lie in [0, 1), got {tau}")
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    log_k = math.log(k_over_s0)
    if abs(log_k) < ATM_LOG_TOL:
        return BsRateResult(0.0, 0.0, 0.0, 0.0, Branch.BETA, 0.0, tau, k_over_s0)
    if log_k > 0:
        beta = _solve_beta(log_k, tau)
        c, j = beta_rate(beta, tau)
        res = _beta_equation(beta, tau, log_k)
        return BsRateResult(j, j / sigma**2, c, beta, Branch.BETA, res, tau, k_over_s0)
    xi = _solve_xi(log_k, tau)
    c, j = xi_rate(xi, tau)
    res = _xi_equation(xi, tau, log_k)
    return BsRateResult(j, j / sigma**2, c, xi, Branch.XI, res, tau, k_over_s0)


def j_bs(x: float) -> float:
    """Rate function of a standard (non forward start) Asian option at ``K/S0 = x``."""
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    return solve_fwd_rate(x, 0.0).j_fwd


def asian_leg(u: np.ndarray, branch: Branch, param: float) -> np.ndarray:
    """Optimal Asian log-path on ``[0, 1]`` with ``phi(0) = 0`` and ``phi'(1) = 0``."""
    u = np.asarray(u, dtype=float)
    if param == 0.0:
        return np.zeros_like(u)
    if branch is Branch.BETA:
        b = param
        # b u - 2 log((e^{bu} + e^b)/(1 + e^b)), written to avoid overflow
        return b * u - 2.0 * (np.logaddexp(b * u, b) - np.logaddexp(0.0, b))
    z = param
    return 2.0 * (np.log(np.cos(z)) - np.log(np.cos(z * (u - 1.0))))


def asian_leg_slope(u: np.ndarray, branch: Branch, param: float) -> np.ndarray:
    """Derivative of :func:`asian_leg` in ``u``."""
    u = np.asarray(u, dtype=float)
    if branch is Branch.BETA:
        return param * np.tanh(0.5 * param * (1.0 - u))
    return 2.0 * param * np.tan(param * (u - 1.0))


@dataclass(frozen=True)
class PathSample:
    """Sampled log-price offsets ``f(t)`` on ``[0, 1]``.

    The node ``t = corner`` appears twice (once closing the linear leg, once opening
    the Asian leg) so the kink location is exact in the sample. ``slopes`` holds
    the one-sided derivative ``f'`` at each node, left-sided at the first copy of
    the corner and right-sided at the second.
    """

    grid: np.ndarray
    values: np.ndarray
    corner: float
    constraint_residual: float
    slopes: np.ndarray | None = None

    @property
    def corner_slope_gap(self) -> float:
        """``|f'(tau-) - f'(tau+)|`` from the stored one-sided slopes."""
        if self.slopes is None or self.corner <= 0:
            return 0.0
        i = int(np.searchsorted(self.grid, self.corner))
        return float(abs(self.slopes[i] - self.slopes[i + 1]))


def _window_average(t: np.ndarray, f: np.ndarray, tau: float) -> float:
    """Trapezoid estimate of ``(1/(1-tau)) int_tau^1 e^f dt`` with Richardson refinement."""
    mask = t >= tau
    tw, fw = t[mask], f[mask]
    # drop the duplicated corner node so the window grid is strictly increasing
    keep = np.concatenate(([True], np.diff(tw) > 0))
    tw, fw = tw[keep], fw[keep]
    e = np.exp(fw)
    fine = np.trapezoid(e, tw)
    if (len(tw) - 1) % 2 == 0:
        coarse = np.trapezoid(e[::2], tw[::2])
        fine = fine + (fine - coarse) / 3.0
    return fine / (1.0 - tau)


def optimal_path(k_over_s0: float, tau: float, n_grid: int = 256) -> PathSample:
    """Sample the optimal path for the fixed strike forward start rate problem.

    Args:
        k_over_s0: Strike over spot.
        tau: Forward start fraction.
        n_grid: Number of intervals in the averaging window; the linear leg gets a
            proportional number (at least one).

    Returns:
        Path sample including the duplicated corner node.
    """
    if n_grid < 3:
        raise DomainError("n_grid must be at least 3")
    res = solve_fwd_rate(k_over_s0, tau)
    u = np.linspace(0.0, 1.0, n_grid + 1)
    leg = asian_leg(u, res.side, res.beta_or_xi)
    leg_slope = asian_leg_slope(u, res.side, res.beta_or_xi) / (1.0 - tau)
    if tau > 0:
        n_pre = max(1, int(round(n_grid * tau / (1.0 - tau))))
        t_pre = np.linspace(0.0, tau, n_pre + 1)
        t = np.concatenate((t_pre, tau + (1.0 - tau) * u))
        f = np.concatenate((res.c * t_pre, res.c * tau + leg))
        slopes = np.concatenate((np.full(n_pre + 1, res.c), leg_slope))
    else:
        t, f, slopes = u, leg, leg_slope
    avg = _window_average(t, f, tau)
    return PathSample(t, f, tau, avg - k_over_s0, slopes)
