"""Model and contract specifications, forward average and moneyness.

The underlying follows ``dS = (r - q) S dt + sigma(S) S dW`` with a volatility
function bounded away from zero and infinity. Contracts average the price over
the window ``[tau T, T]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Union

import numpy as np

from .errors import DomainError
from .numerics import exprel


class Family(str, Enum):
    FIXED = "fixed"
    FLOATING = "floating"
    GENERALIZED = "generalized"


class Side(str, Enum):
    CALL = "call"
    PUT = "put"


class Label(str, Enum):
    OTM = "OTM"
    ATM = "ATM"
    ITM = "ITM"


@dataclass(frozen=True)
class Constant:
    """Constant Black-Scholes volatility."""

    sigma: float

    def __post_init__(self) -> None:
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be positive and finite, got {self.sigma}")

    @property
    def sigma_lo(self) -> float:
        return self.sigma

    @property
    def sigma_hi(self) -> float:
        return self.sigma

    def __call__(self, s: float) -> float:
        return self.sigma

    def on_array(self, s: np.ndarray) -> np.ndarray:
        return np.full(np.shape(s), self.sigma)


@dataclass(frozen=True)
class LocalVol:
    """Local volatility ``sigma(s)`` with user-supplied bounds.

    The bounds are checked against ``sigma_fn`` on a log-spaced price grid when a
    :class:`ModelSpec` is built (the grid is centred on the spot, which this
    object does not know). ``sigma_fn`` must be safe to call concurrently.

    Attributes:
        sigma_fn: Maps a price to a volatility.
        sigma_lo: Lower bound, strictly positive.
        sigma_hi: Upper bound, finite.
        name: Optional label used in CLI output.
        vectorized: Whether ``sigma_fn`` accepts numpy arrays elementwise. The Monte
            Carlo engine falls back to a per-element loop otherwise.
    """

    sigma_fn: Callable[[float], float]
    sigma_lo: float
    sigma_hi: float
    name: str = "local"
    vectorized: bool = False

    def __post_init__(self) -> None:
        if not (0 < self.sigma_lo <= self.sigma_hi < math.inf):
            raise DomainError(
                f"need 0 < sigma_lo <= sigma_hi < inf, got {self.sigma_lo}, {self.sigma_hi}"
            )

    def __call__(self, s: float) -> float:
        return float(self.sigma_fn(s))

    def on_array(self, s: np.ndarray) -> np.ndarray:
        if self.vectorized:
            return np.asarray(self.sigma_fn(s), dtype=float)
        return np.array([self.sigma_fn(v) for v in np.ravel(s)], dtype=float).reshape(np.shape(s))


VolSpec = Union[Constant, LocalVol]

# Log-moneyness range used to spot-check local volatility bounds.
_CHECK_LOG_RANGE = 8.0
_CHECK_POINTS = 161


@dataclass(frozen=True)
class ModelSpec:
    """Market model: spot, rates and volatility."""

    s0: float
    r: float = 0.0
    q: float = 0.0
    vol: VolSpec = field(default_factory=lambda: Constant(0.2))

    def __post_init__(self) -> None:
        if not (self.s0 > 0 and math.isfinite(self.s0)):
            raise DomainError(f"s0 must be positive, got {self.s0}")
        if self.r < 0 or self.q < 0:
            raise DomainError(f"rates must be non-negative, got r={self.r}, q={self.q}")
        if isinstance(self.vol, LocalVol):
            grid = self.s0 * np.exp(np.linspace(-_CHECK_LOG_RANGE, _CHECK_LOG_RANGE, _CHECK_POINTS))
            values = np.array([self.vol(s) for s in grid])
            tol = 1e-12 * self.vol.sigma_hi
            bad = (values < self.vol.sigma_lo - tol) | (values > self.vol.sigma_hi + tol)
            if not np.all(np.isfinite(values)) or bad.any():
                s_bad = float(grid[np.argmax(bad | ~np.isfinite(values))])
                raise DomainError(
                    f"local volatility leaves [{self.vol.sigma_lo}, {self.vol.sigma_hi}] "
                    f"near s={s_bad:.6g}"
                )

    def sigma_at(self, s: float) -> float:
        return self.vol(s)

    @property
    def is_constant_vol(self) -> bool:
        return isinstance(self.vol, Constant)


@dataclass(frozen=True)
class ContractSpec:
    """Asian option contract.

    Attributes:
        family: Fixed strike, floating strike or generalized payoff.
        side: Call or put.
        strike_k: Fixed strike ``K``; required for fixed and generalized contracts.
        kappa: Floating strike multiplier; required for floating and generalized.
        maturity_t: Maturity ``T`` in years.
        tau: Averaging starts at ``tau * T``. Generalized contracts use ``tau = 0``.
    """

    family: Family
    side: Side
    maturity_t: float
    strike_k: float | None = None
    kappa: float | None = None
    tau: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "side", Side(self.side))
        if not (0.0 <= self.tau < 1.0):
            raise DomainError(f"tau must lie in [0, 1), got {self.tau}")
        if not self.maturity_t > 0:
            raise DomainError(f"maturity must be positive, got {self.maturity_t}")
        if self.family is Family.FIXED:
            if self.strike_k is None or not self.strike_k > 0:
                raise DomainError("fixed strike contracts need strike_k > 0")
        elif self.family is Family.FLOATING:
            if self.kappa is None or not self.kappa > 0:
                raise DomainError("floating strike contracts need kappa > 0")
        else:
            if self.kappa is None or not self.kappa > 0:
                raise DomainError("generalized contracts need kappa > 0")
            if self.strike_k is None or self.strike_k < 0:
                raise DomainError("generalized contracts need strike_k >= 0")
            if self.tau != 0.0:
                raise DomainError("generalized contracts average from time 0 (tau = 0)")


@dataclass(frozen=True)
class Moneyness:
    """Moneyness label and the log-strike coordinate.

    ``log_strike_x`` is ``log(K/S0)`` for fixed strike, ``log(kappa)`` for floating
    strike and ``log(kappa + K/S0)`` for generalized contracts.
    """

    label: Label
    log_strike_x: float


def forward_average(model: ModelSpec, t: float, tau: float) -> float:
    """Risk-neutral expectation of the average of ``S`` over ``[tau t, t]``.

    Written as ``e^a (e^d - 1)/d`` with ``d = (r - q)(1 - tau) t``, which avoids
    cancellation and is continuous across ``r = q``.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if not 0.0 <= tau < 1.0:
        raise DomainError(f"tau must lie in [0, 1), got {tau}")
    mu = model.r - model.q
    a = mu * tau * t
    b = mu * t
    return model.s0 * math.exp(a) * exprel(b - a)


def _label(otm: bool, atm: bool) -> Label:
    if atm:
        return Label.ATM
    return Label.OTM if otm else Label.ITM


def classify(model: ModelSpec, contract: ContractSpec) -> Moneyness:
    """Small-maturity moneyness: compares the strike against the spot.

    ATM means exact equality after normalization. A numerical band, if wanted, is a
    pricing-layer decision.
    """
    call = contract.side is Side.CALL
    if contract.family is Family.FIXED:
        k = contract.strike_k / model.s0
        x = math.log(k)
        # call OTM iff K > S0
        return Moneyness(_label((k > 1.0) == call, k == 1.0), x)
    if contract.family is Family.FLOATING:
        kappa = contract.kappa
        return Moneyness(_label((kappa < 1.0) == call, kappa == 1.0), math.log(kappa))
    level = contract.kappa + contract.strike_k / model.s0
    return Moneyness(_label((level < 1.0) == call, level == 1.0), math.log(level))


def shifted_reciprocal(a: float, b: float, s0: float, floor_ratio: float = math.exp(-8.0)) -> LocalVol:
    """Local volatility ``a + b * s0 / s``, floored in price at ``s0 * floor_ratio``.

    The floor keeps the function bounded as ``s -> 0``; paths relevant to small
    maturity asymptotics never come near it.
    """
    if a <= 0 or b < 0:
        raise DomainError("shifted reciprocal needs a > 0 and b >= 0")
    s_floor = s0 * floor_ratio

    def sigma_fn(s):
        return a + b * s0 / np.maximum(s, s_floor)

    return LocalVol(sigma_fn, a, a + b / floor_ratio,
                    name=f"shifted-reciprocal(a={a},b={b})", vectorized=True)


def clamped_cev(sigma0: float, beta: float, s0: float, lo: float, hi: float) -> LocalVol:
    """CEV-like local volatility ``sigma0 (s/s0)^(beta-1)`` clamped to ``[lo, hi]``."""
    if not 0 < lo <= hi:
        raise DomainError("clamped CEV needs 0 < lo <= hi")

    def sigma_fn(s):
        return np.clip(sigma0 * (np.asarray(s) / s0) ** (beta - 1.0), lo, hi)

    return LocalVol(sigma_fn, lo, hi,
                    name=f"clamped-cev(sigma0={sigma0},beta={beta})", vectorized=True)
