"""Monte Carlo pricer used as the reference for every asymptotic result.

Paths are simulated chunk by chunk. Each chunk owns an independent random
stream spawned from the seed, and chunk results are combined in chunk order, so
the output does not depend on how many worker threads ran the chunks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .domain_model import ContractSpec, Family, Label, ModelSpec, Side, classify
from .errors import ConfigError, DomainError, StatisticalFailure

CHUNK_PATHS = 1 << 15
THREADS_ENV = "ASIANRAY_THREADS"


class Scheme(str, Enum):
    EXACT_GBM = "ExactGbm"
    EULER_LOG_SPACE = "EulerLogSpace"


@dataclass(frozen=True)
class McConfig:
    """Simulation settings.

    Attributes:
        n_paths: Number of paths (rounded up to even when antithetic).
        n_steps: Time steps over ``[0, T]``; the averaging window gets its
            proportional share, with both window ends on the grid.
        seed: Root seed of the per-chunk streams.
        antithetic: Pair each normal draw with its negative.
        scheme: Exact lognormal steps (constant volatility) or log-Euler steps.
        workers: Thread count; defaults to ``$ASIANRAY_THREADS`` or the CPU count.
    """

    n_paths: int
    n_steps: int
    seed: int = 20240601
    antithetic: bool = True
    scheme: Scheme = Scheme.EXACT_GBM
    workers: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.n_paths < 2 or self.n_steps < 2:
            raise ConfigError("n_paths and n_steps must be at least 2")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class McPrice:
    """Discounted price estimate.

    ``average_mean`` is the sample mean of the window average itself
    (undiscounted), which makes pathwise parity checks possible.
    """

    price: float
    std_error: float
    n_paths_used: int
    average_mean: float


def _worker_count(cfg: McConfig) -> int:
    if cfg.workers is not None:
        return max(1, cfg.workers)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def _window_grid(tau: float, n_steps: int) -> tuple[int, int]:
    """Split ``n_steps`` into steps before and inside the averaging window."""
    n_win = max(1, int(round((1.0 - tau) * n_steps)))
    n_pre = n_steps - n_win
    if tau > 0 and n_pre < 1:
        n_pre, n_win = 1, max(1, n_steps - 1)
    if tau == 0:
        n_pre, n_win = 0, n_steps
    return n_pre, n_win


def _simulate_chunk(
    model: ModelSpec,
    contract: ContractSpec,
    cfg: McConfig,
    n_paths: int,
    seed_seq: np.random.SeedSequence,
) -> tuple[float, float, int, float]:
    """Simulate one chunk and return (sum, sum of squares, samples, sum of averages)."""
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    t, tau = contract.maturity_t, contract.tau
    mu = model.r - model.q
    n_pre, n_win = _window_grid(tau, cfg.n_steps)
    half = n_paths // 2 if cfg.antithetic else n_paths
    width = 2 * half if cfg.antithetic else half

    def draw() -> np.ndarray:
        z = rng.standard_normal(half)
        return np.concatenate((z, -z)) if cfg.antithetic else z

    log_s = np.full(width, math.log(model.s0))
    exact = cfg.scheme is Scheme.EXACT_GBM
    sigma_c = model.vol.sigma if exact else None

    def step(log_s: np.ndarray, dt: float) -> np.ndarray:
        z = draw()
        if exact:
            return log_s + (mu - 0.5 * sigma_c**2) * dt + sigma_c * math.sqrt(dt) * z
        sig = model.vol.on_array(np.exp(log_s))
        return log_s + (mu - 0.5 * sig * sig) * dt + sig * math.sqrt(dt) * z

    if n_pre:
        if exact:
            # only the level at the window start matters, and one exact step is exact
            log_s = step(log_s, tau * t)
        else:
            dt_pre = tau * t / n_pre
            for _ in range(n_pre):
                log_s = step(log_s, dt_pre)

    dt_win = (1.0 - tau) * t / n_win
    s = np.exp(log_s)
    acc = 0.5 * s
    for i in range(n_win):
        log_s = step(log_s, dt_win)
        s = np.exp(log_s)
        acc += s if i < n_win - 1 else 0.5 * s
    avg = acc / n_win
    s_t = s

    call = contract.side is Side.CALL
    if contract.family is Family.FIXED:
        inner = avg - contract.strike_k
    elif contract.family is Family.FLOATING:
        inner = contract.kappa * s_t - avg
    else:
        inner = contract.kappa * s_t - avg + contract.strike_k
    payoff = np.maximum(inner if call else -inner, 0.0) * math.exp(-model.r * t)
    if cfg.antithetic:
        payoff = 0.5 * (payoff[:half] + payoff[half:])
    return (
        math.fsum(payoff),
        math.fsum(payoff * payoff),
        payoff.size,
        math.fsum(avg) / (2.0 if cfg.antithetic else 1.0),
    )


def price_mc(model: ModelSpec, contract: ContractSpec, cfg: McConfig) -> McPrice:
    """Monte Carlo price of an Asian contract.

    The window average uses trapezoidal weights on the simulation grid.

    Raises:
        ConfigError: If exact lognormal steps are requested with local volatility.
    """
    if cfg.scheme is Scheme.EXACT_GBM and not model.is_constant_vol:
        raise ConfigError("ExactGbm requires constant volatility; use EulerLogSpace")
    n_paths = cfg.n_paths + (cfg.n_paths % 2 if cfg.antithetic else 0)
    sizes = [CHUNK_PATHS] * (n_paths // CHUNK_PATHS)
    if n_paths % CHUNK_PATHS:
        sizes.append(n_paths % CHUNK_PATHS)
    streams = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    jobs = list(zip(sizes, streams))

    workers = min(_worker_count(cfg), len(jobs))
    if workers == 1:
        parts = [_simulate_chunk(model, contract, cfg, n, ss) for n, ss in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _simulate_chunk(model, contract, cfg, *job), jobs))

    total = math.fsum(p[0] for p in parts)
    total_sq = math.fsum(p[1] for p in parts)
    count = sum(p[2] for p in parts)
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0) * count / max(count - 1, 1)
    avg_mean = math.fsum(p[3] for p in parts) / count
    return McPrice(mean, math.sqrt(var / count), n_paths, avg_mean)


def rate_convergence_probe(
    model: ModelSpec,
    contract: ContractSpec,
    t_ladder: list[float],
    cfg: McConfig,
) -> list[tuple[float, float]]:
    """``-T log C(T)`` along a maturity ladder for an out-of-the-money contract.

    Raises:
        DomainError: If the contract is not out of the money.
        StatisticalFailure: If a ladder price is within two standard errors of zero.
    """
    if classify(model, contract).label is not Label.OTM:
        raise DomainError("the convergence probe needs an out-of-the-money contract")
    out = []
    for t in t_ladder:
        res = price_mc(model, replace(contract, maturity_t=t), cfg)
        if res.price <= 2.0 * res.std_error:
            raise StatisticalFailure(
                f"price at T={t} is within two standard errors of zero "
                f"({res.price:.3g} +/- {res.std_error:.3g})"
            )
        out.append((t, -t * math.log(res.price)))
    return out
