"""Rate functions under local volatility via a two-level variational problem.

The forward start rate is

    I_fwd = inf_c { c^2 tau / 2 + I(S0 exp(F^{-1}(c tau)), K) / (1 - tau) },

where ``F(y) = int_0^y dz / sigma(S0 e^z)`` and the inner rate ``I(x, K)`` is the
least action ``(1/2) int_0^1 (phi' / sigma(x e^phi))^2 du`` over paths with
``phi(0) = 0`` whose average ``int_0^1 e^phi`` hits the target.

The inner problem is discretized on a uniform grid (midpoint volatility,
trapezoidal constraint) and solved by Newton's method on the full optimality
system: a tridiagonal Hessian bordered by the constraint gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .bs_rate import PathSample, asian_leg, solve_fwd_rate
from .domain_model import ModelSpec
from .errors import ConvergenceError, DomainError, OuterBracketFailure
from .numerics import Bracket, SolverConfig, find_root, integrate, minimize_1d

DEFAULT_N_GRID = 256
MAX_NEWTON = 50
_QUAD_CFG = SolverConfig(rel_tol=1e-13, abs_tol=1e-15, max_iter=60)
_INV_CFG = SolverConfig(rel_tol=1e-14, abs_tol=1e-13, max_iter=200)
_OUTER_CFG = SolverConfig(rel_tol=1e-9, abs_tol=1e-11, max_iter=200)
_FD_STEP = 1e-5
_LOG_CLIP = 700.0
_FD_STEP2 = 1e-4


class Kind(str, Enum):
    FIXED_AVERAGE = "FixedAverage"
    FLOATING_AVERAGE = "FloatingAverage"


@dataclass(frozen=True)
class InnerProblem:
    """Inner path problem started from price ``start_price``.

    ``target`` is ``K / start_price`` for a fixed strike and ``kappa`` for a
    floating strike.
    """

    start_price: float
    target: float
    kind: Kind
    n_grid: int = DEFAULT_N_GRID

    def __post_init__(self) -> None:
        if not (self.start_price > 0 and self.target > 0):
            raise DomainError("start_price and target must be positive")
        if self.n_grid < 4:
            raise DomainError("n_grid must be at least 4")


@dataclass(frozen=True)
class LvRateResult:
    """Solution of the two-level problem.

    ``i_fwd`` equals ``c_star^2 tau / 2 + inner_value / (1 - tau)`` by
    construction. ``c_star`` is the slope of ``F(f(t))`` on the first leg, i.e.
    measured in units of volatility.
    """

    i_fwd: float
    c_star: float
    inner_value: float
    path: PathSample
    outer_iterations: int
    corner_slope_gap: float


# Lamperti-type transform --------------------------------------------------------


def f_transform(model: ModelSpec, y: float) -> float:
    """``F(y) = int_0^y dz / sigma(S0 e^z)``."""
    if model.is_constant_vol:
        return y / model.vol.sigma
    return integrate(lambda z: 1.0 / _sigma_log(model, z), 0.0, y, _QUAD_CFG)


def _sigma_log(model: ModelSpec, z: float) -> float:
    """``sigma(S0 e^z)``; the exponent is clipped so wide brackets cannot overflow
    (the volatility is bounded, so far tails are all alike)."""
    return model.sigma_at(model.s0 * math.exp(min(max(z, -_LOG_CLIP), _LOG_CLIP)))


def f_inverse(model: ModelSpec, v: float) -> float:
    """Solve ``F(y) = v``. The root lies in ``[sigma_lo v, sigma_hi v]``."""
    if model.is_constant_vol:
        return model.vol.sigma * v
    if v == 0.0:
        return 0.0
    lo_vol, hi_vol = model.vol.sigma_lo, model.vol.sigma_hi
    a, b = sorted((lo_vol * v, hi_vol * v))
    g = lambda y: f_transform(model, y) - v  # noqa: E731
    for _ in range(60):
        if g(a) <= 0.0 <= g(b):
            break
        # a degenerate bracket (sigma_lo == sigma_hi) still has to grow
        width = max(b - a, 1e-12 * abs(a))
        a, b = a - width, b + width
    else:
        raise ConvergenceError("F inverse bracket search failed", v=v)
    if a == b:
        return a
    dg = lambda y: 1.0 / _sigma_log(model, y)  # noqa: E731
    return find_root(g, Bracket(a, b), _INV_CFG, fprime=dg)


def _f_inverse_path(model: ModelSpec, targets: np.ndarray) -> np.ndarray:
    """``F^{-1}`` on an increasing-magnitude sequence, integrating step by step."""
    if model.is_constant_vol:
        return model.vol.sigma * targets
    out = np.empty_like(targets)
    y_prev, v_prev = 0.0, 0.0
    for i, v in enumerate(targets):
        dv = v - v_prev
        y = y_prev + dv * _sigma_log(model, y_prev)
        for _ in range(30):
            g = integrate(lambda z: 1.0 / _sigma_log(model, z), y_prev, y, _QUAD_CFG) - dv
            step = g * _sigma_log(model, y)
            y -= step
            if abs(step) < 1e-15 + 1e-14 * abs(y):
                break
        out[i] = y
        y_prev, v_prev = y, v
    return out


# Inner problem --------------------------------------------------------------------


WeightFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]


def _weights(model: ModelSpec, x: float) -> WeightFn:
    """``w(m) = 1 / sigma(x e^m)^2`` and its first two derivatives in ``m``."""
    if model.is_constant_vol:
        w0 = 1.0 / model.vol.sigma**2

        def const(m: np.ndarray):
            z = np.zeros_like(m)
            return np.full_like(m, w0), z, z

        return const

    def w_of(m: np.ndarray) -> np.ndarray:
        return np.array([model.sigma_at(x * math.exp(v)) ** -2 for v in m])

    def local(m: np.ndarray):
        w = w_of(m)
        wp, wm = w_of(m + _FD_STEP), w_of(m - _FD_STEP)
        w1 = (wp - wm) / (2.0 * _FD_STEP)
        wp2, wm2 = w_of(m + _FD_STEP2), w_of(m - _FD_STEP2)
        w2 = (wp2 - 2.0 * w + wm2) / _FD_STEP2**2
        return w, w1, w2

    return local


@dataclass
class _InnerSolution:
    value: float
    phi: np.ndarray
    multiplier: float
    iterations: int
    residual: float


def solve_constrained_path(
    weights: WeightFn,
    a: float,
    b: float,
    n_grid: int,
    phi_init: np.ndarray,
) -> _InnerSolution:
    """Minimize ``sum (dphi)^2 w(mid) / (2h)`` subject to
    ``trapz(e^phi) - a e^{phi(1)} = b`` with ``phi(0) = 0``.

    Newton iteration on the optimality system in ``(phi_1..phi_n, lambda)`` with
    backtracking on the residual norm. This covers the fixed strike constraint
    (``a = 0``), the floating one (``b = 0``) and the generalized payoff.

    Raises:
        ConvergenceError: With ``value`` and ``converged=False`` diagnostics.
    """
    n = n_grid
    h = 1.0 / n
    omega = np.full(n + 1, h)
    omega[0] = omega[-1] = 0.5 * h

    def parts(phi: np.ndarray):
        d = np.diff(phi)
        m = 0.5 * (phi[:-1] + phi[1:])
        w, w1, w2 = weights(m)
        energy = float(np.sum(d * d * w)) / (2.0 * h)
        ed = d * w / h
        em = d * d * w1 / (2.0 * h)
        grad = np.zeros(n + 1)
        grad[:-1] += -ed + 0.5 * em
        grad[1:] += ed + 0.5 * em
        e_dd = w / h
        e_dm = d * w1 / h
        e_mm = d * d * w2 / (2.0 * h)
        diag = np.zeros(n + 1)
        diag[:-1] += e_dd - e_dm + 0.25 * e_mm
        diag[1:] += e_dd + e_dm + 0.25 * e_mm
        off = -e_dd + 0.25 * e_mm
        ex = np.exp(phi)
        cgrad = omega * ex
        cgrad[-1] -= a * ex[-1]
        cons = float(np.sum(omega * ex) - a * ex[-1] - b)
        return energy, grad, diag, off, cgrad, cons

    def kkt_residual(phi: np.ndarray, lam: float):
        energy, grad, diag, off, cgrad, cons = parts(phi)
        r = grad[1:] - lam * cgrad[1:]
        return energy, r, cons, diag, off, cgrad

    phi = np.array(phi_init, dtype=float)
    phi[0] = 0.0
    energy, grad, _, _, cgrad, cons = parts(phi)
    cg = cgrad[1:]
    lam = float(np.dot(cg, grad[1:]) / np.dot(cg, cg)) if np.any(cg) else 0.0

    scale = max(1.0, abs(b), abs(a))
    energy, r, cons, diag, off, cgrad = kkt_residual(phi, lam)
    merit = math.sqrt(float(np.dot(r, r)) + cons * cons)
    for it in range(1, MAX_NEWTON + 1):
        # Hessian of the Lagrangian restricted to nodes 1..n (tridiagonal)
        hd = diag[1:] - lam * cgrad[1:]
        ho = off[1:]
        cg = cgrad[1:]
        ab = np.zeros((3, n))
        ab[0, 1:] = ho
        ab[1, :] = hd
        ab[2, :-1] = ho
        try:
            sol = solve_banded((1, 1), ab, np.column_stack((-r, cg)))
            u, v = sol[:, 0], sol[:, 1]
            denom = float(np.dot(cg, v))
            if not np.isfinite(sol).all() or denom == 0.0:
                raise LinAlgError("degenerate")
            dlam = (-cons - float(np.dot(cg, u))) / denom
            dphi = u + v * dlam
        except (LinAlgError, ValueError):
            full = np.zeros((n + 1, n + 1))
            full[:n, :n] = np.diag(hd) + np.diag(ho, 1) + np.diag(ho, -1)
            full[:n, n] = -cg
            full[n, :n] = cg
            step = np.linalg.lstsq(full, np.concatenate((-r, [-cons])), rcond=None)[0]
            dphi, dlam = step[:n], float(step[n])

        alpha = 1.0
        for _ in range(40):
            trial = phi.copy()
            trial[1:] += alpha * dphi
            t_lam = lam + alpha * dlam
            t_energy, t_r, t_cons, t_diag, t_off, t_cgrad = kkt_residual(trial, t_lam)
            t_merit = math.sqrt(float(np.dot(t_r, t_r)) + t_cons * t_cons)
            if np.isfinite(t_merit) and t_merit <= (1.0 - 1e-4 * alpha) * merit:
                break
            alpha *= 0.5
        else:
            if merit < 1e-10 * scale:
                break
            raise ConvergenceError(
                "inner Newton line search failed", value=energy, converged=False,
                residual=merit, iterations=it,
            )
        phi, lam = trial, t_lam
        energy, r, cons, diag, off, cgrad = t_energy, t_r, t_cons, t_diag, t_off, t_cgrad
        merit = t_merit
        step_size = alpha * float(np.max(np.abs(dphi)))
        if merit < 1e-13 * scale or step_size < 1e-14:
            return _InnerSolution(energy, phi, lam, it, abs(cons))
    if merit < 1e-10 * scale:
        return _InnerSolution(energy, phi, lam, MAX_NEWTON, abs(cons))
    raise ConvergenceError(
        "inner Newton iteration did not converge", value=energy, converged=False,
        residual=merit, iterations=MAX_NEWTON,
    )


def _bs_warm_start(target: float, kind: Kind, n_grid: int) -> np.ndarray:
    u = np.linspace(0.0, 1.0, n_grid + 1)
    res = solve_fwd_rate(target, 0.0)
    if kind is Kind.FIXED_AVERAGE:
        return asian_leg(u, res.side, res.beta_or_xi)
    # time reversal maps the floating constraint onto the fixed one
    psi = asian_leg(1.0 - u, res.side, res.beta_or_xi)
    return psi - asian_leg(np.array([1.0]), res.side, res.beta_or_xi)[0]


def _inner(problem: InnerProblem, model: ModelSpec) -> _InnerSolution:
    n = problem.n_grid
    if problem.kind is Kind.FIXED_AVERAGE:
        a, b = 0.0, problem.target
    else:
        a, b = problem.target, 0.0
    if problem.target == 1.0:
        return _InnerSolution(0.0, np.zeros(n + 1), 0.0, 0, 0.0)
    phi0 = _bs_warm_start(problem.target, problem.kind, n)
    return solve_constrained_path(_weights(model, problem.start_price), a, b, n, phi0)


def inner_rate(problem: InnerProblem, model: ModelSpec) -> tuple[float, np.ndarray]:
    """Discrete least action for the inner problem and the optimal grid path.

    Raises:
        ConvergenceError: If Newton's method stalls; diagnostics carry the best value.
    """
    sol = _inner(problem, model)
    return sol.value, sol.phi


# Outer problem --------------------------------------------------------------------


def _one_sided_slope(phi: np.ndarray, h: float) -> float:
    return (-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * h)


def fwd_rate(
    model: ModelSpec,
    k: float,
    tau: float,
    kind: Kind = Kind.FIXED_AVERAGE,
    n_grid: int = DEFAULT_N_GRID,
) -> LvRateResult:
    """Forward start rate under local volatility.

    Args:
        model: Market model (constant or local volatility).
        k: Strike ``K`` for a fixed strike, multiplier ``kappa`` for a floating one.
        tau: Forward start fraction in ``[0, 1)``.
        kind: Which averaging constraint applies.
        n_grid: Intervals in the inner grid.

    Raises:
        OuterBracketFailure: If the outer minimum stays on a bracket end after five
            expansions.
        ConvergenceError: Propagated from the inner solver.
    """
    if not k > 0:
        raise DomainError(f"k must be positive, got {k}")
    if not 0.0 <= tau < 1.0:
        raise DomainError(f"tau must lie in [0, 1), got {tau}")
    kind = Kind(kind)
    s0 = model.s0
    sigma0 = model.sigma_at(s0)

    def start_of(c: float) -> tuple[float, float]:
        y = f_inverse(model, c * tau)
        return y, s0 * math.exp(y)

    def problem_at(c: float) -> InnerProblem:
        _, x = start_of(c)
        target = k / x if kind is Kind.FIXED_AVERAGE else k
        return InnerProblem(x, target, kind, n_grid)

    cache: dict[float, _InnerSolution] = {}

    def objective(c: float) -> float:
        sol = _inner(problem_at(c), model)
        cache[c] = sol
        return 0.5 * c * c * tau + sol.value / (1.0 - tau)

    evaluations = 0
    if tau == 0.0:
        c_star = 0.0
        objective(0.0)
        evaluations = 1
    else:
        c_bs = solve_fwd_rate(k / s0, tau).c / sigma0 if kind is Kind.FIXED_AVERAGE else 0.0
        centre, half = c_bs, max(1.0, 2.0 * abs(c_bs))
        for _ in range(6):
            br = Bracket(centre - half, centre + half)
            counted = _Counted(objective)
            c_star, _ = minimize_1d(counted, br, _OUTER_CFG)
            evaluations += counted.calls
            edge = 1e-6 * br.width
            if br.lo + edge < c_star < br.hi - edge:
                break
            centre, half = c_star, 2.0 * half
        else:
            raise OuterBracketFailure("outer minimum stuck at the bracket edge", c=c_star)
        if c_star not in cache:
            objective(c_star)

    sol = cache[c_star]
    i_fwd = 0.5 * c_star**2 * tau + sol.value / (1.0 - tau)
    path, gap = _assemble_path(model, c_star, tau, sol.phi, kind, k, n_grid)
    return LvRateResult(i_fwd, c_star, sol.value, path, evaluations, gap)


class _Counted:
    def __init__(self, fn: Callable[[float], float]) -> None:
        self.fn = fn
        self.calls = 0

    def __call__(self, c: float) -> float:
        self.calls += 1
        return self.fn(c)


def _assemble_path(
    model: ModelSpec,
    c: float,
    tau: float,
    phi: np.ndarray,
    kind: Kind,
    k: float,
    n_grid: int,
) -> tuple[PathSample, float]:
    s0 = model.s0
    h = 1.0 / n_grid
    u = np.linspace(0.0, 1.0, n_grid + 1)
    dphi = np.gradient(phi, h, edge_order=2) / (1.0 - tau)
    if tau > 0:
        n_pre = max(2, int(round(n_grid * tau / (1.0 - tau))))
        t_pre = np.linspace(0.0, tau, n_pre + 1)
        f_pre = _f_inverse_path(model, c * t_pre)
        slope_pre = np.array([c * model.sigma_at(s0 * math.exp(f)) for f in f_pre])
        f_tau = float(f_pre[-1])
        grid = np.concatenate((t_pre, tau + (1.0 - tau) * u))
        values = np.concatenate((f_pre, f_tau + phi))
        right = _one_sided_slope(phi, h) / (1.0 - tau)
        slopes = np.concatenate((slope_pre, dphi))
        slopes[n_pre + 1] = right
        gap = abs(slope_pre[-1] - right)
    else:
        f_tau = 0.0
        grid, values, slopes, gap = u, phi.copy(), dphi, 0.0
    omega = np.full(n_grid + 1, h)
    omega[0] = omega[-1] = 0.5 * h
    avg = math.exp(f_tau) * float(np.sum(omega * np.exp(phi)))
    if kind is Kind.FIXED_AVERAGE:
        residual = avg - k / s0
    else:
        residual = avg - k * math.exp(float(values[-1]))
    return PathSample(grid, values, tau, residual, slopes), gap


def path_energy(path: PathSample, model: ModelSpec) -> tuple[float, float]:
    """``(1/2) int f'^2 dt`` and ``(1/2) int (f'/sigma)^2 dt`` on a sampled path.

    Uses the trapezoidal rule on each leg separately so the corner is respected.
    """
    t, f = path.grid, path.values
    split = np.flatnonzero(np.diff(t) == 0.0)
    pieces = np.split(np.arange(len(t)), split + 1) if len(split) else [np.arange(len(t))]
    plain = scaled = 0.0
    for idx in pieces:
        if len(idx) < 2:
            continue
        tt, ff = t[idx], f[idx]
        dt = np.diff(tt)
        slope = np.diff(ff) / dt
        mid = 0.5 * (ff[:-1] + ff[1:])
        sig = np.array([model.sigma_at(model.s0 * math.exp(v)) for v in mid])
        plain += 0.5 * float(np.sum(slope**2 * dt))
        scaled += 0.5 * float(np.sum((slope / sig) ** 2 * dt))
    return plain, scaled
