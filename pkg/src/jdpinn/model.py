"""Market model, deterministic sentiment policies, PDE coefficients, domain maps.

The pricing PDE lives on the unit square after the change of variables
t = (T - t') / T (remaining-time fraction) and S = S' / S_max, with option
values carried in S_max units. Its coefficients depend on the delayed
sentiment level, which for PDE construction is replaced by a deterministic
policy: either frozen at phi(0) or following the mean path
phi(0) * exp(mu_p * max(t' - tau, 0)).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import DataError, NumericalError
from .estimation import JumpDiffusionEstimate, SentimentEstimate

POLICY_KINDS = ("frozen", "mean-path")


@dataclass(frozen=True)
class MarketModel:
    """Estimated dynamics plus contract terms.

    Rate and maturity are annual; mu/sigma estimates keep the sampling-period
    scale of the data they came from, and day_count links the two clocks where
    the annual jump intensity meets per-period parameters.
    """

    jd: JumpDiffusionEstimate
    sp: SentimentEstimate
    phi0: float
    tau: float
    rate: float
    strike: float
    s_max: float
    maturity: float
    day_count: int = 365

    def __post_init__(self):
        if self.phi0 <= 0.0:
            raise DataError("phi0 must be positive")
        if self.tau < 0.0:
            raise DataError("tau must be nonnegative")
        if self.strike <= 0.0 or self.s_max <= 0.0:
            raise DataError("strike and s_max must be positive")
        if self.strike >= self.s_max:
            raise DataError("strike must be below s_max")
        if self.maturity <= 0.0:
            raise DataError("maturity must be positive")

    @property
    def strike_ratio(self) -> float:
        return self.strike / self.s_max

    def with_maturity(self, maturity: float) -> "MarketModel":
        return replace(self, maturity=maturity)

    def with_tau(self, tau: float) -> "MarketModel":
        return replace(self, tau=tau)


@dataclass(frozen=True)
class SentimentPathPolicy:
    """Deterministic stand-in for the stochastic sentiment factor."""

    kind: str = "mean-path"

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise DataError(f"unknown policy {self.kind!r}, expected one of {POLICY_KINDS}")


FROZEN = SentimentPathPolicy("frozen")
MEAN_PATH = SentimentPathPolicy("mean-path")


@dataclass(frozen=True)
class PdeProblem:
    """Coefficient functions of the transformed pricing equation.

    All three callables take the transformed time t in [0, 1] (t = 1 is the
    full time to expiry); beta additionally takes the normalized price and is
    linear in it. Values are in S_max units throughout.
    """

    sigma_star_sq: Callable[[float], float]
    eta: Callable[[float], float]
    beta: Callable[[float, float], float]
    rate: float
    maturity: float
    strike_ratio: float


def sentiment_level(model: MarketModel, policy: SentimentPathPolicy, t_calendar: float) -> float:
    """Deterministic sentiment entering the dynamics at calendar time t_calendar.

    The delay is already applied: the returned level is the policy path
    evaluated at t_calendar - tau, with the constant initial segment phi(0)
    covering nonpositive arguments.
    """
    if t_calendar < -model.tau:
        raise DataError("t_calendar below the initial-segment start")
    if policy.kind == "frozen":
        return model.phi0
    lag = max(t_calendar - model.tau, 0.0)
    return model.phi0 * float(np.exp(model.sp.mu_p * lag))


def build_pde(
    model: MarketModel, policy: SentimentPathPolicy, variant: str = "jmd"
) -> PdeProblem:
    """Construct the transformed-domain coefficients.

    variant "jmd" keeps the excess drift mu_d - lam * k; variant "bs" zeroes
    it, which collapses eta to the risk-free rate and beta to 0 while keeping
    the sentiment-scaled variance. Dividing the dollar equation by S_max
    leaves the form invariant because beta is linear in price, so beta here
    already takes the normalized price.
    """
    if variant not in ("jmd", "bs"):
        raise DataError(f"unknown model variant {variant!r}")
    if model.jd.sigma_d == 0.0:
        raise NumericalError("degenerate diffusion: sigma_d = 0")
    sigma_sq = model.jd.sigma_d**2
    excess = model.jd.mu_d - model.jd.lam * model.jd.k if variant == "jmd" else 0.0
    rate, maturity = model.rate, model.maturity

    def level(t):
        # numpy ufuncs keep the coefficient callables vectorized over time
        t_cal = maturity * (1.0 - np.asarray(t, dtype=float))
        if policy.kind == "frozen":
            return model.phi0 * np.ones_like(t_cal)
        lag = np.maximum(t_cal - model.tau, 0.0)
        return model.phi0 * np.exp(model.sp.mu_p * lag)

    def sigma_star_sq(t):
        return sigma_sq * level(t)

    def eta(t):
        return rate + excess * level(t)

    def beta(t, s):
        return -excess * np.asarray(s, dtype=float) * level(t)

    return PdeProblem(
        sigma_star_sq=sigma_star_sq,
        eta=eta,
        beta=beta,
        rate=rate,
        maturity=maturity,
        strike_ratio=model.strike_ratio,
    )


def transform(t_calendar: float, s_dollars: float, model: MarketModel):
    """(calendar years, dollars) -> (remaining-time fraction, normalized price)."""
    if not 0.0 <= t_calendar <= model.maturity:
        raise DataError("t_calendar outside [0, maturity]")
    if not 0.0 <= s_dollars <= model.s_max:
        raise DataError("s_dollars outside [0, s_max]")
    return (model.maturity - t_calendar) / model.maturity, s_dollars / model.s_max


def inverse_transform(t: float, s: float, model: MarketModel):
    """Inverse of :func:`transform`; exact round trip up to rounding."""
    if not 0.0 <= t <= 1.0 or not 0.0 <= s <= 1.0:
        raise DataError("transformed coordinates outside the unit square")
    return model.maturity * (1.0 - t), s * model.s_max
