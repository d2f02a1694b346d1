"""Floating strike and generalized Asian rate functions under Black-Scholes.

Also hosts the floating/fixed symmetry map. The generalized payoff is
``(kappa S_T - A_T + K)^+`` with the average taken from time zero; its rate
``J_g(kappa, K/S0)`` is symmetric in its two arguments and vanishes on the line
``kappa + K/S0 = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .bs_rate import j_bs
from .domain_model import ContractSpec, Family, ModelSpec, Side
from .errors import ConvergenceError, DomainError, UnsupportedFamily
from .numerics import Bracket, SolverConfig, exprel, find_root

ATM_LINE_TOL = 1e-12
_ROOT_CFG = SolverConfig(rel_tol=1e-15, abs_tol=1e-15, max_iter=400)
_POLE_GAP = 1e-8
_SCAN_POINTS = 400


def floating_rate_bs(kappa: float, tau: float, sigma: float = 1.0) -> float:
    """Rate ``I_f = J_BS(kappa) / ((1 - tau) sigma^2)`` of a floating strike option.

    The optimal path stays flat before the window, so only the window length
    enters.
    """
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    if not 0.0 <= tau < 1.0:
        raise DomainError(f"tau must lie in [0, 1), got {tau}")
    return j_bs(kappa) / ((1.0 - tau) * sigma**2)


class GenRegion(str, Enum):
    A = "A"
    B = "B"
    ATM_LINE = "ATMLine"


@dataclass(frozen=True)
class GenRateResult:
    """Generalized rate and the solved path parameters.

    Region A (``kappa + K/S0 > 1``) uses ``(beta, gamma)``; region B uses
    ``(xi, eta)``. ``branch_index`` is 1 when ``xi + eta`` came from
    ``asin(2 xi kappa)/2`` and 2 for ``pi/2 - asin(2 xi kappa)/2``; 0 otherwise.
    Shifting ``xi + eta`` by a multiple of ``pi`` leaves every equation unchanged,
    so those two families exhaust the branches.
    """

    j_g: float
    i_g: float
    region: GenRegion
    beta: float | None = None
    gamma: float | None = None
    xi: float | None = None
    eta: float | None = None
    branch_index: int = 0
    residuals: tuple[float, ...] = ()
    n_candidates: int = 1

    @property
    def ambiguous(self) -> bool:
        """Several distinct feasible branch solutions existed; the smallest rate won."""
        return self.n_candidates > 1


# Region A ----------------------------------------------------------------------


def _d_of(beta: float, kappa: float) -> float:
    kb = kappa * beta
    return kb + math.sqrt(1.0 + kb * kb)


def _region_a_residual(beta: float, kappa: float, k: float) -> float:
    """Average-constraint residual with ``gamma = e^beta / D`` eliminated."""
    d = _d_of(beta, kappa)
    ratio = (1.0 + d * math.exp(-beta)) / (1.0 + d)  # (gamma + 1)/(gamma + e^beta)
    # (gamma+1)/(gamma+e^b) (e^b-1)/b - kappa e^b ((gamma+1)/(gamma+e^b))^2, e^b factored out
    return math.exp(beta) * (ratio * exprel(-beta) - kappa * ratio * ratio) - k


def _region_a_rate(beta: float, kappa: float) -> float:
    d = _d_of(beta, kappa)
    em = math.exp(-beta)
    g_over = 1.0 / (1.0 + d * em)  # gamma / (gamma + 1)
    tail = -math.expm1(-beta) * d / (d + 1.0)  # (e^b - 1)/(e^b + gamma)
    return 0.5 * beta**2 - 2.0 * beta * g_over * tail


def _solve_region_a(kappa: float, k: float, sigma: float) -> GenRateResult:
    f = lambda b: _region_a_residual(b, kappa, k)  # noqa: E731
    lo = 1e-6
    while f(lo) >= 0.0:
        lo *= 0.1
        if lo < 1e-300:
            raise ConvergenceError("region A lower bracket not found", kappa=kappa, k=k)
    hi = 1.0
    while f(hi) <= 0.0:
        hi *= 2.0
        if hi > 700.0:
            raise ConvergenceError("region A upper bracket not found", kappa=kappa, k=k)
    beta = find_root(f, Bracket(lo, hi), _ROOT_CFG)
    d = _d_of(beta, kappa)
    gamma = math.exp(beta) / d if beta < 700 else math.inf
    g_res = gamma * d / math.exp(beta) - 1.0 if math.isfinite(gamma) else 0.0
    j = _region_a_rate(beta, kappa)
    if math.isfinite(gamma):
        # direct form of the rate as a consistency residual
        j_direct = 0.5 * beta**2 - 2.0 * beta * gamma / (gamma + 1.0) * math.expm1(beta) / (
            math.exp(beta) + gamma
        )
        j_res = j_direct - j
    else:
        j_res = 0.0
    return GenRateResult(
        j, j / sigma**2, GenRegion.A, beta=beta, gamma=gamma,
        residuals=(j_res, g_res, f(beta)),
    )


# Region B ----------------------------------------------------------------------


def _theta(xi: float, kappa: float, family: int) -> float:
    half = 0.5 * math.asin(min(1.0, 2.0 * xi * kappa))
    return half if family == 1 else 0.5 * math.pi - half


def _region_b_residual(xi: float, kappa: float, k: float, family: int) -> float:
    th = _theta(xi, kappa, family)
    eta = th - xi
    ct = math.cos(th)
    ce = math.cos(eta)
    return ce * math.sin(xi) / (xi * ct) - kappa * ce * ce / (ct * ct) - k


def _pole_free(eta: float, theta: float) -> bool:
    """True if ``cos`` has no zero on ``[eta, theta]`` (with margin)."""
    lo, hi = min(eta, theta), max(eta, theta)
    m = math.ceil((lo - 0.5 * math.pi) / math.pi)
    pole = 0.5 * math.pi + m * math.pi
    return not (lo - _POLE_GAP <= pole <= hi + _POLE_GAP)


def _solve_region_b(kappa: float, k: float, sigma: float) -> GenRateResult:
    # xi may exceed pi/2 once eta < 0; the pole check below keeps paths finite
    xi_max = math.pi
    if kappa > 0:
        xi_max = min(xi_max, 0.5 / kappa)
    xi_max *= 1.0 - 1e-12
    grid = np.linspace(xi_max * 1e-6, xi_max, _SCAN_POINTS)
    candidates = []
    for family in (1, 2):
        g = lambda z: _region_b_residual(z, kappa, k, family)  # noqa: E731
        vals = []
        for z in grid:
            try:
                vals.append(g(z))
            except (ZeroDivisionError, ValueError):
                vals.append(math.nan)
        for i in range(len(grid) - 1):
            a, b = vals[i], vals[i + 1]
            if not (math.isfinite(a) and math.isfinite(b)) or a * b > 0:
                continue
            # skip sign flips caused by a pole of 1/cos(theta) rather than a root
            if abs(a) > 1e6 or abs(b) > 1e6:
                continue
            xi = find_root(g, Bracket(grid[i], grid[i + 1]), _ROOT_CFG)
            th = _theta(xi, kappa, family)
            eta = th - xi
            if not _pole_free(eta, th):
                continue
            j = 2.0 * xi * (math.tan(th) - math.tan(eta) - xi)
            res_xi = g(xi)
            res_eta = math.sin(2.0 * th) / (2.0 * xi) - kappa
            if j > 0 and abs(res_xi) < 1e-9 and abs(res_eta) < 1e-9:
                candidates.append((j, xi, eta, family, res_eta, res_xi))
    if not candidates:
        raise ConvergenceError("no feasible region B solution", kappa=kappa, k=k)
    candidates.sort()
    j, xi, eta, family, res_eta, res_xi = candidates[0]
    n_distinct = len({round(c[0], 10) for c in candidates})
    return GenRateResult(
        j, j / sigma**2, GenRegion.B, xi=xi, eta=eta, branch_index=family,
        residuals=(res_eta, res_xi), n_candidates=n_distinct,
    )


def generalized_rate_bs(kappa: float, k_over_s0: float, sigma: float = 1.0) -> GenRateResult:
    """Rate of the generalized Asian option ``(kappa S_T - A_T + K)^+``.

    Args:
        kappa: Weight on the terminal price, ``>= 0``.
        k_over_s0: Fixed strike over spot, ``>= 0``.
        sigma: Constant volatility used for ``i_g``.

    Raises:
        DomainError: If both arguments vanish or either is negative.
        ConvergenceError: If the defining equations have no feasible solution.
    """
    if kappa < 0 or k_over_s0 < 0 or (kappa == 0 and k_over_s0 == 0):
        raise DomainError(f"need kappa, K/S0 >= 0 not both zero, got {kappa}, {k_over_s0}")
    level = kappa + k_over_s0 - 1.0
    if abs(level) <= ATM_LINE_TOL:
        return GenRateResult(0.0, 0.0, GenRegion.ATM_LINE)
    region = GenRegion.A if level > 0 else GenRegion.B
    if kappa == 0.0 or k_over_s0 == 0.0:
        # with one argument zero the problem is the plain Asian problem in the other
        j = j_bs(kappa + k_over_s0)
        return GenRateResult(j, j / sigma**2, region)
    if region is GenRegion.A:
        return _solve_region_a(kappa, k_over_s0, sigma)
    return _solve_region_b(kappa, k_over_s0, sigma)


# Symmetry ----------------------------------------------------------------------


class Relation(str, Enum):
    """Floating/fixed price identities.

    ``F_X_1``: floating call over ``[tau T, T]`` and fixed put over ``[0, (1-tau) T]``.
    ``F_X_2``: the same with put and call exchanged.
    ``F_X_3`` / ``F_X_4``: floating over ``[0, (1-tau) T]`` against fixed over
    ``[tau T, T]``. These do not hold in distribution for ``tau > 0`` (the fixed
    side depends on the random level at ``tau T``) and are exposed for study only.
    """

    F_X_1 = "f-x-1"
    F_X_2 = "f-x-2"
    F_X_3 = "f-x-3"
    F_X_4 = "f-x-4"


class Direction(str, Enum):
    FLOATING_TO_FIXED = "floating_to_fixed"
    FIXED_TO_FLOATING = "fixed_to_floating"


@dataclass(frozen=True)
class SymmetryResult:
    """Image of a contract under a symmetry relation.

    ``price(original) = factor * price(mapped)`` where ``mapped`` lives in
    ``model`` (rates swapped).
    """

    model: ModelSpec
    contract: ContractSpec
    factor: float
    relation: Relation
    direction: Direction
    exact: bool
    tau: float = field(default=0.0)


def _swap_rates(model: ModelSpec) -> ModelSpec:
    return replace(model, r=model.q, q=model.r)


def symmetry_map(
    model: ModelSpec,
    contract: ContractSpec,
    tau: float | None = None,
    relation: Relation | None = None,
) -> SymmetryResult:
    """Map a contract to its symmetric partner.

    Floating to fixed (default ``F_X_1``/``F_X_2`` by side): a floating option
    with window ``[tau T, T]`` maps to a fixed option of the other side with strike
    ``kappa S0``, rates swapped, window ``[0, (1-tau) T]``. The floating price
    equals ``exp(-q tau T)`` times the fixed price.

    Fixed to floating is the inverse and needs the forward start fraction ``tau``
    of the floating image (default 0), since any ``tau`` with the right window
    length is a valid preimage.

    Args:
        model: Constant volatility model of the original contract.
        contract: Floating or fixed strike contract.
        tau: Forward start fraction of the floating side for fixed-to-floating maps,
            and of the fixed side for the ``F_X_3``/``F_X_4`` relations.
        relation: Force ``F_X_3``/``F_X_4``; otherwise chosen from the side.

    Raises:
        UnsupportedFamily: For generalized contracts or local volatility.
    """
    if contract.family is Family.GENERALIZED:
        raise UnsupportedFamily("symmetry relations cover floating and fixed strikes only")
    if not model.is_constant_vol:
        raise UnsupportedFamily("symmetry relations need constant volatility")
    swapped = _swap_rates(model)
    other = Side.PUT if contract.side is Side.CALL else Side.CALL
    late = relation in (Relation.F_X_3, Relation.F_X_4)

    if contract.family is Family.FLOATING:
        rel = {Side.CALL: Relation.F_X_1, Side.PUT: Relation.F_X_2}[contract.side]
        if late:
            # floating over [0, (1 - s) T] against fixed over [s T, T]
            if contract.tau != 0.0:
                raise DomainError("relations f-x-3/4 start the floating side at time 0")
            s = 0.0 if tau is None else tau
            rel = {Side.CALL: Relation.F_X_3, Side.PUT: Relation.F_X_4}[contract.side]
            mapped = ContractSpec(Family.FIXED, other, contract.maturity_t / (1.0 - s),
                                  strike_k=contract.kappa * model.s0, tau=s)
            # the printed relation carries no discount adjustment
            return SymmetryResult(swapped, mapped, 1.0, rel,
                                  Direction.FLOATING_TO_FIXED, exact=(s == 0.0), tau=s)
        t = contract.maturity_t
        mapped = ContractSpec(Family.FIXED, other, (1.0 - contract.tau) * t,
                              strike_k=contract.kappa * model.s0, tau=0.0)
        factor = math.exp(-model.q * contract.tau * t)
        return SymmetryResult(swapped, mapped, factor, rel,
                              Direction.FLOATING_TO_FIXED, exact=True, tau=contract.tau)

    # fixed -> floating
    kappa = contract.strike_k / model.s0
    if late:
        rel = {Side.PUT: Relation.F_X_3, Side.CALL: Relation.F_X_4}[contract.side]
        s = contract.tau
        mapped = ContractSpec(Family.FLOATING, other, (1.0 - s) * contract.maturity_t,
                              kappa=kappa, tau=0.0)
        return SymmetryResult(swapped, mapped, 1.0, rel,
                              Direction.FIXED_TO_FLOATING, exact=(s == 0.0), tau=s)
    if contract.tau != 0.0:
        raise DomainError("relations f-x-1/2 need the fixed side to average from time 0")
    s = 0.0 if tau is None else tau
    if not 0.0 <= s < 1.0:
        raise DomainError(f"tau must lie in [0, 1), got {s}")
    rel = {Side.PUT: Relation.F_X_1, Side.CALL: Relation.F_X_2}[contract.side]
    t = contract.maturity_t / (1.0 - s)
    mapped = ContractSpec(Family.FLOATING, other, t, kappa=kappa, tau=s)
    # the floating image's dividend yield is the fixed side's rate
    factor = math.exp(model.r * s * t)
    return SymmetryResult(swapped, mapped, factor, rel,
                          Direction.FIXED_TO_FLOATING, exact=True, tau=s)
