"""Threshold-based jump detection and moment estimation of model parameters.

A day is a jump day when the absolute log-return exceeds the threshold
epsilon; the jump intensity is then jumps-per-year. Diffusion drift and
volatility are the sample mean and standard deviation of the full return
series, and the detected jump returns are used directly as log jump-size
observations (no deconvolution of the diffusion component). All estimates are
reported at the sampling-period scale of the input returns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .market_data import ReturnSeries

DEFAULT_THRESHOLD = 0.07


@dataclass(frozen=True)
class JumpThresholdConfig:
    epsilon: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise DataError("threshold epsilon must be positive")


@dataclass(frozen=True)
class JumpDiffusionEstimate:
    """Diffusion and jump parameters.

    mu_d / sigma_d are per sampling period, lam is per year, and
    k = exp(mu_j + delta_j^2 / 2) - 1. With no detected jumps, lam and k are 0
    and mu_j / delta_j are NaN sentinels (reported as not available, never 0).
    A single detected jump pins mu_j to its value with delta_j = 0 (one
    observation carries no spread information). jump_count is None when the
    estimate was not derived from data.
    """

    mu_d: float
    sigma_d: float
    lam: float
    k: float
    mu_j: float
    delta_j: float
    jump_count: int | None = None

    def __post_init__(self):
        if self.sigma_d < 0.0:
            raise DataError("sigma_d must be nonnegative")
        if not math.isnan(self.delta_j) and self.delta_j < 0.0:
            raise DataError("delta_j must be nonnegative")
        if math.isnan(self.mu_j):
            if self.k != 0.0:
                raise DataError("k must be 0 when jump sizes are unavailable")
        else:
            implied = math.exp(self.mu_j + self.delta_j**2 / 2.0) - 1.0
            if abs(self.k - implied) > 1e-12 * max(1.0, abs(implied)):
                raise DataError("k inconsistent with (mu_j, delta_j)")


@dataclass(frozen=True)
class SentimentEstimate:
    """Drift and volatility of the sentiment index, per sampling period."""

    mu_p: float
    sigma_p: float

    def __post_init__(self):
        if self.sigma_p < 0.0:
            raise DataError("sigma_p must be nonnegative")


def detect_jumps(returns: ReturnSeries, cfg: JumpThresholdConfig):
    """Partition return indices into (jump_indices, diffusion_indices).

    Index i is a jump when |r_i| > epsilon, strictly.
    """
    if len(returns) == 0:
        raise DataError("empty return series")
    r = np.asarray(returns.values)
    mask = np.abs(r) > cfg.epsilon
    idx = np.arange(len(r))
    return idx[mask], idx[~mask]


def estimate_jump_diffusion(
    returns: ReturnSeries, cfg: JumpThresholdConfig
) -> JumpDiffusionEstimate:
    jump_idx, diff_idx = detect_jumps(returns, cfg)
    if len(diff_idx) == 0:
        raise DataError("threshold too small: every return classified as a jump")
    r = np.asarray(returns.values)
    mu_d = float(np.mean(r))
    sigma_d = float(np.std(r, ddof=1))
    n_jumps = int(len(jump_idx))
    lam = n_jumps / returns.period_years
    if n_jumps == 0:
        mu_j, delta_j, k = math.nan, math.nan, 0.0
    else:
        jumps = r[jump_idx]
        mu_j = float(np.mean(jumps))
        delta_j = float(np.std(jumps, ddof=1)) if n_jumps >= 2 else 0.0
        k = math.exp(mu_j + delta_j**2 / 2.0) - 1.0
    return JumpDiffusionEstimate(
        mu_d=mu_d,
        sigma_d=sigma_d,
        lam=lam,
        k=k,
        mu_j=mu_j,
        delta_j=delta_j,
        jump_count=n_jumps,
    )


def estimate_sentiment(trend_returns: ReturnSeries) -> SentimentEstimate:
    """Sample mean / standard deviation of the sentiment log-returns."""
    if len(trend_returns) < 2:
        raise DataError("need at least 2 trend returns")
    r = np.asarray(trend_returns.values)
    return SentimentEstimate(mu_p=float(np.mean(r)), sigma_p=float(np.std(r, ddof=1)))
