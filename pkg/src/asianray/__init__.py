"""Short-maturity asymptotics for forward start Asian options.

Rate functions, optimal paths, price asymptotes and equivalent volatilities for
fixed strike, floating strike and generalized Asian options under Black-Scholes
and local volatility, with a Monte Carlo engine as the reference.
"""

__version__ = "0.1.0"

from .bs_rate import BsRateResult, PathSample, j_bs, optimal_path, solve_fwd_rate
from .domain_model import (
    Constant,
    ContractSpec,
    Family,
    Label,
    LocalVol,
    ModelSpec,
    Moneyness,
    Side,
    classify,
    clamped_cev,
    forward_average,
    shifted_reciprocal,
)
from .errors import (
    AsianRayError,
    ConfigError,
    ConvergenceError,
    DomainError,
    RegimeUnsupported,
    StatisticalFailure,
    UnsupportedFamily,
)
from .floating_generalized import floating_rate_bs, generalized_rate_bs, symmetry_map
from .lv_rate import fwd_rate
from .mc_oracle import McConfig, McPrice, Scheme, price_mc
from .pricing import PriceResult, asymptotic_price, equivalent_vols, floating_price_approx

__all__ = [
    "AsianRayError", "BsRateResult", "ConfigError", "Constant", "ContractSpec",
    "ConvergenceError", "DomainError", "Family", "Label", "LocalVol", "McConfig",
    "McPrice", "ModelSpec", "Moneyness", "PathSample", "PriceResult",
    "RegimeUnsupported", "Scheme", "Side", "StatisticalFailure", "UnsupportedFamily",
    "asymptotic_price", "clamped_cev", "classify", "equivalent_vols",
    "floating_price_approx", "floating_rate_bs", "forward_average", "fwd_rate",
    "generalized_rate_bs", "j_bs", "optimal_path", "price_mc", "shifted_reciprocal",
    "solve_fwd_rate", "symmetry_map",
]
