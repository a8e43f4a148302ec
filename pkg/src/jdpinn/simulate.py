"""Path simulation for the bivariate dynamics and Feynman-Kac pricing.

Clock conventions. Horizons and the jump intensity are annual. Price drift
and volatility (mu_d, sigma_d) keep the sampling-period scale of the data
they were estimated from; model.day_count converts between the two clocks
inside the price equation (day_count = 1 makes periods and years coincide).
Sentiment parameters apply to the year clock directly, matching the
deterministic policy formulas.

Randomness: every path owns a Philox sub-stream keyed by (seed, lane,
path index), so paths are bit-reproducible individually and batches can be
generated in any order or in parallel without changing results. Normals come
from the inverse-CDF map, one uniform each.

The Feynman-Kac estimator prices the transformed equation's problem, not the
raw jump process: the rewritten equation has no integro term, so the
representing process is a pure diffusion with drift eta(t) and variance
sigma*^2(t), plus a running source from beta. Paths reaching the upper
boundary s = 1 are absorbed with the discounted rebate 1 - E/S_max, which
makes the estimator solve the same truncated-domain problem as the
finite-difference and neural solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .estimation import SentimentEstimate
from .model import MarketModel, PdeProblem
from .rngutil import generator, normals

MIN_PATHS = 100
_CHUNK = 8192


@dataclass(frozen=True)
class PathConfig:
    n_steps: int
    horizon: float
    seed: int = 0
    scheme: str = "exact"
    antithetic: bool = False

    def __post_init__(self):
        if self.n_steps < 1:
            raise DataError("n_steps must be >= 1")
        if self.horizon <= 0.0:
            raise DataError("horizon must be positive")
        if self.scheme not in ("euler", "exact"):
            raise DataError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class SamplePath:
    times: np.ndarray
    s_values: np.ndarray | None
    p_values: np.ndarray
    jump_times: np.ndarray


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n_paths: int


def simulate_sentiment(sp: SentimentEstimate, phi0: float, cfg: PathConfig,
                       path_index: int = 0) -> SamplePath:
    """One sentiment path. Exact scheme uses the closed-form lognormal step."""
    if phi0 <= 0.0:
        raise DataError("phi0 must be positive")
    rng = generator(cfg.seed, "sentiment-path", path_index)
    dt = cfg.horizon / cfg.n_steps
    z = normals(rng, cfg.n_steps)
    times = np.linspace(0.0, cfg.horizon, cfg.n_steps + 1)
    if cfg.scheme == "exact":
        increments = (sp.mu_p - 0.5 * sp.sigma_p**2) * dt + sp.sigma_p * math.sqrt(dt) * z
        p = phi0 * np.exp(np.concatenate([[0.0], np.cumsum(increments)]))
    else:
        p = np.empty(cfg.n_steps + 1)
        p[0] = phi0
        for i in range(cfg.n_steps):
            p[i + 1] = p[i] * (1.0 + sp.mu_p * dt + sp.sigma_p * math.sqrt(dt) * z[i])
            if p[i + 1] <= 0.0:
                raise NumericalError(
                    f"euler sentiment path went nonpositive at t={times[i + 1]:.6g}"
                )
    return SamplePath(times=times, s_values=None, p_values=p, jump_times=np.array([]))


def _delayed(p, lag_steps, phi0):
    """Delayed path values at the left node of every step (constant pre-history)."""
    if lag_steps <= 0:
        return p
    shifted = np.full_like(p, phi0)
    shifted[lag_steps:] = p[: len(p) - lag_steps]
    return shifted


def simulate_jump_diffusion(model: MarketModel, cfg: PathConfig, s0: float | None = None,
                            path_index: int = 0) -> SamplePath:
    """One bivariate (S, P) path with Poisson jumps.

    Euler multiplies per step by (1 + drift + diffusion) and by the jump
    factor 1 + P_delayed (y - 1) on Bernoulli(lambda dt) events; the exact
    scheme exponentiates the closed-form log increments and places jumps at
    exponential inter-arrival times. Jump sizes ln y are Normal(mu_j,
    delta_j^2). A jump factor <= 0 aborts with the offending time.
    """
    jd, sp = model.jd, model.sp
    if s0 is None:
        s0 = model.s_max
    rng = generator(cfg.seed, "jump-path", path_index)
    n = cfg.n_steps
    dt_years = cfg.horizon / n
    dt_periods = dt_years * model.day_count
    times = np.linspace(0.0, cfg.horizon, n + 1)

    w = normals(rng, n)
    z = normals(rng, n)

    # Sentiment path first (same scheme family), then its delayed view.
    if cfg.scheme == "exact":
        p_inc = (sp.mu_p - 0.5 * sp.sigma_p**2) * dt_years + sp.sigma_p * math.sqrt(dt_years) * z
        p = model.phi0 * np.exp(np.concatenate([[0.0], np.cumsum(p_inc)]))
    else:
        p = np.empty(n + 1)
        p[0] = model.phi0
        for i in range(n):
            p[i + 1] = p[i] * (1.0 + sp.mu_p * dt_years + sp.sigma_p * math.sqrt(dt_years) * z[i])
            if p[i + 1] <= 0.0:
                raise NumericalError(f"sentiment path went nonpositive at t={times[i + 1]:.6g}")
    lag_steps = int(round(model.tau / dt_years)) if model.tau > 0 else 0
    p_del = _delayed(p, lag_steps, model.phi0)

    # Jump schedule: per-step counts plus recorded event times.
    jumps_per_step = np.zeros(n, dtype=int)
    jump_times = []
    if jd.lam > 0.0:
        if cfg.scheme == "exact":
            t_jump = 0.0
            while True:
                u = max(rng.random(), 2.0**-53)
                t_jump += -math.log(u) / jd.lam
                if t_jump >= cfg.horizon:
                    break
                idx = min(int(t_jump / dt_years), n - 1)
                jumps_per_step[idx] += 1
                jump_times.append(t_jump)
        else:
            u = rng.random(n)
            hit = u < jd.lam * dt_years
            jumps_per_step[hit] = 1
            jump_times = list(times[:-1][hit])
    total_jumps = int(jumps_per_step.sum())
    sizes = normals(rng, total_jumps) * jd.delta_j + jd.mu_j if total_jumps else np.array([])

    excess_per_step = jd.mu_d * dt_periods - jd.lam * jd.k * dt_years
    s = np.empty(n + 1)
    s[0] = s0
    consumed = 0
    for i in range(n):
        pd = p_del[i]
        if cfg.scheme == "exact":
            log_inc = (excess_per_step - 0.5 * jd.sigma_d**2 * dt_periods) * pd
            log_inc += jd.sigma_d * math.sqrt(pd * dt_periods) * w[i]
            factor = math.exp(log_inc)
        else:
            factor = 1.0 + excess_per_step * pd + jd.sigma_d * math.sqrt(pd * dt_periods) * w[i]
            if factor <= 0.0:
                raise NumericalError(f"euler price step went nonpositive at t={times[i + 1]:.6g}")
        for _ in range(jumps_per_step[i]):
            y = math.exp(sizes[consumed])
            consumed += 1
            m = 1.0 + pd * (y - 1.0)
            if m <= 0.0:
                raise NumericalError(
                    f"jump factor nonpositive at jump time t={times[i]:.6g}"
                )
            factor *= m
        s[i + 1] = s[i] * factor
    return SamplePath(times=times, s_values=s, p_values=p, jump_times=np.asarray(jump_times))


def closed_form_bs(spot: float, strike: float, rate: float, sigma: float, tenor: float) -> float:
    """Textbook European call: S Phi(d1) - K e^{-r tenor} Phi(d2).

    Degenerate limits: tenor = 0 gives the payoff; sigma = 0 gives the
    discounted deterministic payoff max(S - K e^{-r tenor}, 0).
    """
    if spot < 0.0 or strike <= 0.0 or tenor < 0.0 or sigma < 0.0:
        raise DataError("closed_form_bs arguments out of range")
    if tenor == 0.0 or sigma == 0.0:
        return max(spot - strike * math.exp(-rate * tenor), 0.0) if tenor > 0.0 else max(
            spot - strike, 0.0
        )
    if spot == 0.0:
        return 0.0
    vol = sigma * math.sqrt(tenor)
    d1 = (math.log(spot / strike) + (rate + 0.5 * sigma**2) * tenor) / vol
    d2 = d1 - vol
    phi = lambda x: 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))
    return spot * phi(d1) - strike * math.exp(-rate * tenor) * phi(d2)


def _fk_chunk(pde: PdeProblem, spot, tenor, n_steps, seed, chunk_index, rows, antithetic):
    """Per-path discounted values for one chunk of the Feynman-Kac estimator."""
    rng = generator(seed, "mc-path", chunk_index)
    # Always draw the full chunk so a path's normals depend only on its
    # index, never on how many paths were requested.
    z_full = normals(rng, (_CHUNK, n_steps))
    z = z_full[:rows]
    if antithetic:
        z = np.concatenate([z, -z], axis=0)

    du = tenor / n_steps
    u_nodes = np.linspace(0.0, tenor, n_steps + 1)  # elapsed time from valuation
    # Node at elapsed u has remaining time (tenor - u) / T on the unit clock.
    t_nodes = (tenor - u_nodes) / pde.maturity
    t_mid = (tenor - (u_nodes[:-1] + 0.5 * du)) / pde.maturity

    sig2 = np.asarray(pde.sigma_star_sq(t_mid), dtype=float) * np.ones(n_steps)
    eta = np.asarray(pde.eta(t_mid), dtype=float) * np.ones(n_steps)
    log_inc = (eta - 0.5 * sig2) * du + np.sqrt(sig2 * du) * z
    logs = math.log(spot) + np.cumsum(log_inc, axis=1)
    s = np.empty((z.shape[0], n_steps + 1))
    s[:, 0] = spot
    s[:, 1:] = np.exp(logs)

    crossed = s >= 1.0
    any_cross = crossed.any(axis=1)
    first = np.where(any_cross, crossed.argmax(axis=1), n_steps)

    disc = np.exp(-pde.rate * u_nodes)
    rebate = 1.0 - pde.strike_ratio
    payoff = np.where(
        any_cross,
        disc[first] * rebate,
        disc[-1] * np.maximum(s[:, -1] - pde.strike_ratio, 0.0),
    )

    # Discounted running source, trapezoid over nodes, halted at absorption.
    g = disc[None, :] * pde.beta(t_nodes[None, :], s)
    weights = np.full(n_steps + 1, du)
    weights[0] = weights[-1] = 0.5 * du
    node_idx = np.arange(n_steps + 1)
    live = node_idx[None, :] <= first[:, None]
    w_eff = np.where(live, weights[None, :], 0.0)
    # Absorption node gets the trailing half weight.
    w_eff[np.arange(len(first)), first] = np.where(
        first > 0, 0.5 * du, w_eff[np.arange(len(first)), first]
    )
    source = np.sum(g * w_eff, axis=1)

    values = payoff - source
    if antithetic:
        half = values.shape[0] // 2
        values = 0.5 * (values[:half] + values[half:])
    return values


def feynman_kac_price(pde: PdeProblem, spot_normalized: float, t_start: float,
                      n_paths: int, cfg: PathConfig, threads: int = 1) -> McEstimate:
    """Monte Carlo value of the transformed problem at (t_start, spot).

    t_start is the remaining-time fraction in [0, 1] (t_start = 1 prices at
    inception, t_start = 0 at expiry). The boundary spots 0 and 1 return
    their exact boundary values with zero standard error. Chunks own
    disjoint sub-streams and are accumulated in chunk order, so any thread
    count yields the identical estimate.
    """
    if n_paths < MIN_PATHS:
        raise NumericalError(f"insufficient paths: {n_paths} < {MIN_PATHS}")
    if not 0.0 <= spot_normalized <= 1.0:
        raise DataError("spot_normalized outside [0, 1]")
    if not 0.0 <= t_start <= 1.0:
        raise DataError("t_start outside [0, 1]")
    kappa = pde.strike_ratio
    if spot_normalized == 0.0:
        return McEstimate(0.0, 0.0, n_paths)
    if spot_normalized == 1.0:
        return McEstimate(1.0 - kappa, 0.0, n_paths)
    tenor = pde.maturity * t_start
    if tenor == 0.0:
        return McEstimate(max(spot_normalized - kappa, 0.0), 0.0, n_paths)

    if cfg.antithetic and n_paths % 2:
        raise DataError("antithetic estimation needs an even path count")
    draws = n_paths // 2 if cfg.antithetic else n_paths
    n_chunks = (draws + _CHUNK - 1) // _CHUNK
    chunk_rows = [min(_CHUNK, draws - c * _CHUNK) for c in range(n_chunks)]
    if threads > 1 and n_chunks > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            pieces = list(pool.map(
                lambda c: _fk_chunk(pde, spot_normalized, tenor, cfg.n_steps,
                                    cfg.seed, c, chunk_rows[c], cfg.antithetic),
                range(n_chunks),
            ))
    else:
        pieces = [
            _fk_chunk(pde, spot_normalized, tenor, cfg.n_steps, cfg.seed,
                      c, chunk_rows[c], cfg.antithetic)
            for c in range(n_chunks)
        ]
    values = np.concatenate(pieces)
    value = float(np.mean(values))
    if not math.isfinite(value):
        raise NumericalError("non-finite Monte Carlo estimate")
    se = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return McEstimate(value=value, std_error=se, n_paths=n_paths)
