"""jdpinn: jump-diffusion + sentiment option pricing toolkit.

Estimation from price/trend CSVs, a transformed Black-Scholes-type pricing
equation with sentiment-scaled coefficients, and three cross-validating
solvers: a trial-solution neural network, a Crank-Nicolson finite-difference
scheme, and a Feynman-Kac Monte Carlo estimator.
"""

__version__ = "0.1.0"

from .errors import DataError, JdpinnError, NumericalError, ValidationError
from .estimation import (
    JumpDiffusionEstimate,
    JumpThresholdConfig,
    SentimentEstimate,
    detect_jumps,
    estimate_jump_diffusion,
    estimate_sentiment,
)
from .fd_solver import FdGrid, FdSolution, solve_crank_nicolson
from .market_data import (
    DescriptiveStats,
    PriceSeries,
    ReturnSeries,
    TrendSeries,
    describe,
    load_price_csv,
    load_trend_csv,
    log_returns,
)
from .model import (
    FROZEN,
    MEAN_PATH,
    MarketModel,
    PdeProblem,
    SentimentPathPolicy,
    build_pde,
    inverse_transform,
    sentiment_level,
    transform,
)
from .neural import (
    EvalResult,
    NetworkArchitecture,
    NetworkParams,
    init_params,
    load_weights,
    param_gradients,
    save_weights,
    single_layer_analytic,
)
from .pinn import (
    CollocationGrid,
    TrainConfig,
    TrainReport,
    TrialFunction,
    loss,
    make_grid,
    residual,
    train,
    trial_derivatives,
    trial_eval,
)
from .simulate import (
    McEstimate,
    PathConfig,
    SamplePath,
    closed_form_bs,
    feynman_kac_price,
    simulate_jump_diffusion,
    simulate_sentiment,
)

__all__ = [name for name in dir() if not name.startswith("_")]
