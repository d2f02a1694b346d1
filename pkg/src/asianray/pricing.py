"""Price asymptotics, equivalent volatilities and vanilla formula evaluators.

Out of the money only the exponential rate ``lim T log C = -I`` is known, so
the OTM "price" ``exp(-I/T)`` is an order-of-magnitude figure. At the money the
price grows like ``coeff * sqrt(T)``; in the money it follows from parity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import ndtr

from . import lv_rate
from .bs_rate import ATM_LOG_TOL, solve_fwd_rate
from .domain_model import (
    ContractSpec,
    Family,
    Label,
    ModelSpec,
    Moneyness,
    Side,
    classify,
    forward_average,
)
from .errors import DomainError, RegimeUnsupported
from .floating_generalized import floating_rate_bs, generalized_rate_bs

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class PriceResult:
    """Small-maturity price information for one contract.

    Attributes:
        price: Approximate price when one is available.
        log_price_slope: ``lim T log C`` (OTM only), equal to ``-I``.
        sqrt_t_coeff: ``lim C / sqrt(T)`` (ATM only).
        regime: Moneyness of the contract.
        sigma_ln: Equivalent log-normal volatility, if defined.
        sigma_n: Equivalent normal volatility, if defined.
        method: How ``price`` was obtained.
    """

    price: float | None
    log_price_slope: float | None
    sqrt_t_coeff: float | None
    regime: Moneyness
    sigma_ln: float | None
    sigma_n: float | None
    method: str


def _npdf(d: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * d * d)


def bs_call(forward: float, strike: float, vol: float, t: float, df: float = 1.0) -> float:
    """Black formula for a call on a forward."""
    if vol < 0 or t < 0:
        raise DomainError("vol and t must be non-negative")
    sd = vol * math.sqrt(t)
    if sd == 0.0:
        return df * max(forward - strike, 0.0)
    d1 = (math.log(forward / strike) + 0.5 * sd * sd) / sd
    return df * (forward * ndtr(d1) - strike * ndtr(d1 - sd))


def bachelier_call(forward: float, strike: float, vol_n: float, t: float, df: float = 1.0) -> float:
    """Bachelier (normal model) call; ``vol_n`` is in price units per root year."""
    if vol_n < 0 or t < 0:
        raise DomainError("vol_n and t must be non-negative")
    sd = vol_n * math.sqrt(t)
    if sd == 0.0:
        return df * max(forward - strike, 0.0)
    d = (forward - strike) / sd
    return df * ((forward - strike) * ndtr(d) + sd * _npdf(d))


# Rates ---------------------------------------------------------------------------


def contract_rate(model: ModelSpec, contract: ContractSpec, n_grid: int = 256) -> float:
    """Rate ``I`` of the contract's strike: closed form for constant volatility,
    the variational solver otherwise.

    Raises:
        RegimeUnsupported: For generalized contracts under local volatility.
    """
    sigma = model.sigma_at(model.s0)
    if contract.family is Family.FIXED:
        if model.is_constant_vol:
            return solve_fwd_rate(contract.strike_k / model.s0, contract.tau, sigma).i_fwd
        return lv_rate.fwd_rate(model, contract.strike_k, contract.tau,
                                lv_rate.Kind.FIXED_AVERAGE, n_grid).i_fwd
    if contract.family is Family.FLOATING:
        if model.is_constant_vol:
            return floating_rate_bs(contract.kappa, contract.tau, sigma)
        return lv_rate.fwd_rate(model, contract.kappa, contract.tau,
                                lv_rate.Kind.FLOATING_AVERAGE, n_grid).i_fwd
    if not model.is_constant_vol:
        raise RegimeUnsupported("generalized rates are available for constant volatility only")
    return generalized_rate_bs(contract.kappa, contract.strike_k / model.s0, sigma).i_g


def atm_coefficient(model: ModelSpec, contract: ContractSpec) -> float:
    """``lim C / sqrt(T)`` at the money."""
    s = model.sigma_at(model.s0) * model.s0
    if contract.family is Family.FIXED:
        return s * math.sqrt((1.0 + 2.0 * contract.tau) / (6.0 * math.pi))
    if contract.family is Family.FLOATING:
        return s * math.sqrt((1.0 - contract.tau) / (6.0 * math.pi))
    k = contract.kappa
    return s * math.sqrt(k * k - k + 1.0 / 3.0) * _INV_SQRT_2PI


def _atm_vols(model: ModelSpec, contract: ContractSpec) -> tuple[float, float]:
    sigma = model.sigma_at(model.s0)
    if contract.family is Family.FIXED:
        ln = sigma * math.sqrt((1.0 + 2.0 * contract.tau) / 3.0)
    elif contract.family is Family.FLOATING:
        ln = sigma * math.sqrt((1.0 - contract.tau) / 3.0)
    else:
        k = contract.kappa
        ln = sigma * math.sqrt(k * k - k + 1.0 / 3.0)
    return ln, ln * model.s0


def _level(model: ModelSpec, contract: ContractSpec) -> float:
    """Strike coordinate whose log is the moneyness: K/S0, kappa or kappa + K/S0."""
    if contract.family is Family.FIXED:
        return contract.strike_k / model.s0
    if contract.family is Family.FLOATING:
        return contract.kappa
    return contract.kappa + contract.strike_k / model.s0


def equivalent_vols(
    model: ModelSpec, contract: ContractSpec, rate: float | None = None
) -> tuple[float, float]:
    """Equivalent log-normal and normal volatilities in the small-maturity limit.

    Away from the money ``Sigma_LN = |log m| / sqrt(2 I)`` and
    ``Sigma_N = |m - 1| S0 / sqrt(2 I)`` with ``m`` the strike level (``K/S0``,
    ``kappa`` or ``kappa + K/S0``). At the money the limits are the closed-form
    variance-weighted levels.

    Args:
        model: Market model.
        contract: Contract; the side does not matter.
        rate: Rate ``I`` of the contract's strike. Computed when omitted.

    Raises:
        DomainError: If the supplied or computed rate is not positive off the money.
    """
    m = _level(model, contract)
    x = math.log(m)
    if abs(x) < ATM_LOG_TOL:
        return _atm_vols(model, contract)
    if rate is None:
        rate = contract_rate(model, contract)
    if not rate > 0:
        raise DomainError(f"rate must be positive away from the money, got {rate}")
    root = math.sqrt(2.0 * rate)
    return abs(x) / root, abs(m - 1.0) * model.s0 / root


def smile_expansion(x: float, tau: float, sigma: float) -> float:
    """Second-order expansion of the equivalent log-normal vol in ``x = log(K/S0)``."""
    a = 1.0 + 2.0 * tau
    b = 1.0 - tau
    poly = 1.0 + b**2 * x / (10.0 * a**2) - b**3 * (23.0 - 143.0 * tau) * x**2 / (2100.0 * a**4)
    return sigma * math.sqrt(a / 3.0) * poly


# Floating strike -------------------------------------------------------------------


def floating_forward(model: ModelSpec, kappa: float, tau: float, t: float) -> float:
    """Forward of ``B = kappa S_T - A`` with the average over ``[tau t, t]``."""
    growth = math.exp((model.r - model.q) * t)
    return kappa * model.s0 * growth - forward_average(model, t, tau)


def floating_price_approx(
    model: ModelSpec, kappa: float, tau: float, t: float, side: Side = Side.CALL
) -> float:
    """Bachelier approximation of a floating strike price.

    The payoff is a zero-strike option on ``B = kappa S_T - A``; ``B`` is priced with
    its exact forward and the small-maturity equivalent normal volatility.
    """
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    contract = ContractSpec(Family.FLOATING, side, t, kappa=kappa, tau=tau)
    _, vol_n = equivalent_vols(model, contract)
    fwd = floating_forward(model, kappa, tau, t)
    if Side(side) is Side.PUT:
        fwd = -fwd
    return bachelier_call(fwd, 0.0, vol_n, t, math.exp(-model.r * t))


# Dispatcher -------------------------------------------------------------------------


def _itm_price(model: ModelSpec, contract: ContractSpec) -> float:
    s0, r, q, t, tau = model.s0, model.r, model.q, contract.maturity_t, contract.tau
    if contract.family is Family.FIXED:
        k = contract.strike_k
        call = s0 - k + (0.5 * s0 * (r - q) * (1.0 + tau) - r * (s0 - k)) * t
        return call if contract.side is Side.CALL else -call
    kappa = contract.kappa
    call = s0 * (kappa - 1.0) + s0 * t * (0.5 * (r + q) - kappa * q - 0.5 * (r - q) * tau)
    return call if contract.side is Side.CALL else -call


def asymptotic_price(model: ModelSpec, contract: ContractSpec, n_grid: int = 256) -> PriceResult:
    """Small-maturity price information dispatched on moneyness.

    * OTM: slope ``-I``; ``price = exp(-I/T)`` flagged as order of magnitude.
    * ATM: ``sqrt_t_coeff``; fixed and generalized prices are ``coeff sqrt(T)``,
      floating prices use the Bachelier approximation.
    * ITM: first-order parity expansion in ``T`` (fixed and floating).

    Raises:
        RegimeUnsupported: ITM generalized contracts (no expansion available) and
            generalized contracts under local volatility away from the money.
    """
    money = classify(model, contract)
    t = contract.maturity_t
    atm = money.label is Label.ATM or abs(money.log_strike_x) < ATM_LOG_TOL
    if atm:
        coeff = atm_coefficient(model, contract)
        ln, n = _atm_vols(model, contract)
        if contract.family is Family.FLOATING:
            price = floating_price_approx(model, contract.kappa, contract.tau, t, contract.side)
            method = "bachelier_floating"
        else:
            price, method = coeff * math.sqrt(t), "atm_sqrt_t"
        return PriceResult(price, None, coeff, money, ln, n, method)

    if money.label is Label.ITM and contract.family is Family.GENERALIZED:
        raise RegimeUnsupported("no in-the-money expansion for generalized contracts")
    rate = contract_rate(model, contract, n_grid)
    ln, n = equivalent_vols(model, contract, rate)
    if money.label is Label.OTM:
        return PriceResult(math.exp(-rate / t), -rate, None, money, ln, n,
                           "otm_exponential_order_of_magnitude")
    return PriceResult(_itm_price(model, contract), None, None, money, ln, n, "itm_parity")
