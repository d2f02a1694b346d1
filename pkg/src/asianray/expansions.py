"""Asymptotic expansions of the Black-Scholes forward start rate function.

Near the money (small ``(1-tau)|x|``) the rate has a Taylor expansion in
``x = log(K/S0)``; far from the money the call wing and two put regimes have
their own leading-order forms. Region boundaries are only defined up to
"much less than", so the thresholds are parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DomainError


class RegionLabel(str, Enum):
    TAU_AATM = "TauAATM"
    TAU_DOTM_CALL_WING = "TauDOTMCallWing"
    TAU_DOTM_PUT_REGION1 = "TauDOTMPutRegion1"
    TAU_DOTM_PUT_REGION2 = "TauDOTMPutRegion2"
    INTERMEDIATE = "Intermediate"


@dataclass(frozen=True)
class Region:
    """Regime of ``(tau, x)``.

    Attributes:
        label: Regime name.
        scale: ``(1 - tau) |x|``.
        kappa_ratio: ``2 tau / ((1 - tau) e^x (-x))`` for ``x < 0``, else ``None``.
            Values below one select put region 1, above one put region 2.
    """

    label: RegionLabel
    scale: float
    kappa_ratio: float | None


def _put_ratio(x: float, tau: float) -> float:
    return 2.0 * tau / ((1.0 - tau) * math.exp(x) * (-x))


def classify_region(
    x: float, tau: float, aatm_threshold: float = 0.1, dotm_threshold: float = 2.0
) -> Region:
    """Classify ``(x, tau)`` into the near-the-money or deep wing regimes."""
    if not 0.0 <= tau < 1.0:
        raise DomainError(f"tau must lie in [0, 1), got {tau}")
    scale = (1.0 - tau) * abs(x)
    ratio = _put_ratio(x, tau) if x < 0 else None
    if scale <= aatm_threshold:
        label = RegionLabel.TAU_AATM
    elif scale < dotm_threshold:
        label = RegionLabel.INTERMEDIATE
    elif x > 0:
        label = RegionLabel.TAU_DOTM_CALL_WING
    elif ratio < 1.0:
        label = RegionLabel.TAU_DOTM_PUT_REGION1
    else:
        label = RegionLabel.TAU_DOTM_PUT_REGION2
    return Region(label, scale, ratio)


def aatm_rate(x: float, tau: float, sigma: float = 1.0) -> float:
    """Fourth-order Taylor expansion of the rate in ``x`` around the money."""
    a = 1.0 + 2.0 * tau
    b = 1.0 - tau
    series = x**2 / a - b**2 * x**3 / (5.0 * a**3) + b**3 * (109.0 - 349.0 * tau) * x**4 / (2100.0 * a**5)
    return 1.5 * series / sigma**2


def dotm_call_rate(x: float, tau: float, sigma: float = 1.0) -> float:
    """Deep out-of-the-money call wing, intended for ``(1 - tau) x > 1``."""
    if x <= 0:
        raise DomainError(f"call wing needs x > 0, got {x}")
    lg = math.log(2.0 * (1.0 - tau) * x)
    return (x**2 + 2.0 * x * lg - 2.0 * x + lg**2) / (2.0 * sigma**2)


def dotm_put_rate(x: float, tau: float, sigma: float = 1.0) -> tuple[float, Region]:
    """Deep out-of-the-money put, dispatched on ``2 tau/(1-tau)`` versus ``e^x (-x)``.

    Region 1 (tiny ``tau``) keeps the exponential growth in ``-x`` of the standard
    Asian put; region 2 grows quadratically like a European put over the window.
    There is no blending: near the boundary both forms are poor and the returned
    region tells the caller so.

    Returns:
        ``(rate, region)`` where ``region.label`` is one of the put labels
        (``Intermediate`` or ``TauAATM`` if ``(1-tau)(-x)`` is below the wing
        threshold; the formula used is still the one selected by the ratio).
    """
    if x >= 0:
        raise DomainError(f"put wing needs x < 0, got {x}")
    region = classify_region(x, tau)
    if _put_ratio(x, tau) < 1.0:
        bracket = math.exp(-2.0 * x) * tau + (1.0 - 3.0 * tau) * math.exp(-x) - math.pi**2 / 4.0 - 1.0
        return 2.0 * bracket / (sigma**2 * (1.0 - tau) ** 2), region
    if tau == 0.0:
        raise DomainError("put region 2 requires tau > 0")
    lg = math.log((-x) * (1.0 - tau) / (2.0 * tau))
    bracket = (
        x**2 / (4.0 * tau)
        + x / (2.0 * tau) * lg
        + (-x) / (2.0 * tau)
        + lg**2 / (4.0 * tau)
        - math.pi**2 / 12.0 * (3.0 - tau) / (1.0 - tau) ** 2
    )
    return 2.0 * bracket / sigma**2, region
