"""Trial-solution neural PDE solver: collocation grid, residual loss, training.

The trial function

    zeta(t, s) = (1 - t) max(s - kappa, 0) + t s (1 - kappa) + t s (1 - s) N(t, s)

satisfies the initial condition at t = 0 and both price boundaries by
construction, so only the interior residual of the transformed pricing
equation is minimized. The residual is

    R = (1/T) dzeta/dt - sigma*^2 s^2 / 2 d2zeta/ds2 - eta s dzeta/ds
        + r zeta + beta(t, s),

where the 1/T factor can be switched off to reproduce the plain unscaled
objective; both variants are supported and tested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import neural
from .errors import DataError, NumericalError
from .model import PdeProblem
from .rngutil import generator

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrialFunction:
    arch: neural.NetworkArchitecture
    params: neural.NetworkParams
    strike_ratio: float

    def __post_init__(self):
        if not 0.0 < self.strike_ratio < 1.0:
            raise DataError("strike_ratio must lie in (0, 1)")


@dataclass(frozen=True)
class CollocationGrid:
    """Uniform lattice t_j = j/n_t, s_i = i/n_s for i, j >= 1, with a split."""

    n_s: int
    n_t: int
    points: np.ndarray  # shape (n_s * n_t, 2), columns (t, s)
    train_idx: np.ndarray
    test_idx: np.ndarray

    @property
    def train_points(self) -> np.ndarray:
        return self.points[self.train_idx]

    @property
    def test_points(self) -> np.ndarray:
        return self.points[self.test_idx]


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "sgd"  # "sgd" or "adam"
    learning_rate: float = 1e-3
    iterations: int = 10000
    batch: int | str = "full"  # "full" or a minibatch size
    seed: int = 0
    convergence_tol: float = 1e-8
    display_every: int = 500
    include_1_over_T: bool = True

    def __post_init__(self):
        if self.optimizer not in ("sgd", "adam"):
            raise DataError(f"unknown optimizer {self.optimizer!r}")
        if self.learning_rate < 0.0:
            raise DataError("learning_rate must be nonnegative")
        if self.iterations < 1:
            raise DataError("iterations must be >= 1")
        if self.batch != "full" and (not isinstance(self.batch, int) or self.batch < 1):
            raise DataError("batch must be 'full' or a positive size")


@dataclass(frozen=True)
class Checkpoint:
    step: int
    split: str  # train | test | full
    mse: float
    rmse: float
    mae: float


@dataclass
class TrainReport:
    checkpoints: list[Checkpoint] = field(default_factory=list)
    final_params: neural.NetworkParams | None = None
    converged: bool = False
    stop_reason: str = ""

    def series(self, split: str = "train"):
        rows = [c for c in self.checkpoints if c.split == split]
        return rows


def make_grid(n_s: int, n_t: int, split_fraction: float = 0.8, seed: int = 0) -> CollocationGrid:
    """n_s * n_t collocation points with a seeded random train/test split."""
    if n_s < 1 or n_t < 1:
        raise DataError("n_s and n_t must be >= 1")
    if not 0.0 < split_fraction <= 1.0:
        raise DataError("split_fraction must be in (0, 1]")
    t = np.arange(1, n_t + 1) / n_t
    s = np.arange(1, n_s + 1) / n_s
    tt, ss = np.meshgrid(t, s, indexing="ij")
    points = np.column_stack([tt.ravel(), ss.ravel()])
    n = len(points)
    perm = generator(seed, "grid-split").permutation(n)
    n_train = max(1, int(round(split_fraction * n)))
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return CollocationGrid(n_s=n_s, n_t=n_t, points=points, train_idx=train_idx, test_idx=test_idx)


def _constraint_terms(kappa, t, s):
    """A, B and the partial derivatives of both, vectorized."""
    payoff = np.maximum(s - kappa, 0.0)
    a = (1.0 - t) * payoff + t * s * (1.0 - kappa)
    a_t = -payoff + s * (1.0 - kappa)
    a_s = np.where(s > kappa, 1.0 - t, 0.0) + t * (1.0 - kappa)
    b = t * s * (1.0 - s)
    b_t = s * (1.0 - s)
    b_s = t * (1.0 - 2.0 * s)
    b_ss = -2.0 * t
    return a, a_t, a_s, b, b_t, b_s, b_ss


def trial_eval_batch(tf: TrialFunction, t, s):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s = np.atleast_1d(np.asarray(s, dtype=float))
    n, _, _, _ = neural.eval_batch(tf.arch, tf.params, t, s)
    a, _, _, b, _, _, _ = _constraint_terms(tf.strike_ratio, t, s)
    return a + b * n


def trial_eval(tf: TrialFunction, t: float, s: float) -> float:
    return float(trial_eval_batch(tf, [t], [s])[0])


def trial_derivatives_batch(tf: TrialFunction, t, s):
    """(dzeta/dt, dzeta/ds, d2zeta/ds2) arrays over a batch of points.

    At s = kappa the payoff slope is taken as 0 (branch chosen by s > kappa
    strictly), matching the kink convention used for ReLU.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s = np.atleast_1d(np.asarray(s, dtype=float))
    n, nt, ns, nss = neural.eval_batch(tf.arch, tf.params, t, s)
    a, a_t, a_s, b, b_t, b_s, b_ss = _constraint_terms(tf.strike_ratio, t, s)
    dt = a_t + b_t * n + b * nt
    ds = a_s + b_s * n + b * ns
    dss = b_ss * n + 2.0 * b_s * ns + b * nss
    return dt, ds, dss


def trial_derivatives(tf: TrialFunction, t: float, s: float):
    dt, ds, dss = trial_derivatives_batch(tf, [t], [s])
    return float(dt[0]), float(ds[0]), float(dss[0])


def residual_batch(tf: TrialFunction, pde: PdeProblem, t, s, include_1_over_T: bool = True):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s = np.atleast_1d(np.asarray(s, dtype=float))
    zeta = trial_eval_batch(tf, t, s)
    dt, ds, dss = trial_derivatives_batch(tf, t, s)
    time_scale = 1.0 / pde.maturity if include_1_over_T else 1.0
    sig2 = pde.sigma_star_sq(t)
    eta = pde.eta(t)
    return (
        time_scale * dt
        - 0.5 * sig2 * s**2 * dss
        - eta * s * ds
        + pde.rate * zeta
        + pde.beta(t, s)
    )


def residual(tf: TrialFunction, pde: PdeProblem, t: float, s: float,
             include_1_over_T: bool = True) -> float:
    return float(residual_batch(tf, pde, [t], [s], include_1_over_T)[0])


def _metrics(res):
    mse = float(np.mean(res**2))
    return mse, math.sqrt(mse), float(np.mean(np.abs(res)))


def loss(tf: TrialFunction, pde: PdeProblem, grid: CollocationGrid,
         cfg: TrainConfig | None = None):
    """(L, mse, rmse, mae) over the grid's training points; L = sum(R^2) / 2."""
    include = cfg.include_1_over_T if cfg is not None else True
    pts = grid.train_points
    if len(pts) == 0:
        raise DataError("empty collocation grid")
    res = residual_batch(tf, pde, pts[:, 0], pts[:, 1], include)
    mse, rmse, mae = _metrics(res)
    return 0.5 * float(np.sum(res**2)), mse, rmse, mae


def loss_gradients(tf: TrialFunction, pde: PdeProblem, points, include_1_over_T: bool = True):
    """Gradient of L = sum(R^2) / 2 over the given points w.r.t. all weights."""
    t = np.asarray(points[:, 0], dtype=float)
    s = np.asarray(points[:, 1], dtype=float)
    res = residual_batch(tf, pde, t, s, include_1_over_T)
    _, _, a_s, b, b_t, b_s, b_ss = _constraint_terms(tf.strike_ratio, t, s)
    time_scale = 1.0 / pde.maturity if include_1_over_T else 1.0
    sig2 = pde.sigma_star_sq(t)
    eta = pde.eta(t)
    half_diff = 0.5 * sig2 * s**2
    # dR/dN etc. assembled from the trial-function structure.
    u_n = res * (time_scale * b_t - half_diff * b_ss - eta * s * b_s + pde.rate * b)
    u_nt = res * time_scale * b
    u_ns = res * (-half_diff * 2.0 * b_s - eta * s * b)
    u_nss = res * (-half_diff * b)
    return neural.param_gradients(tf.arch, tf.params, t, s, (u_n, u_nt, u_ns, u_nss))


def _step_norm(grads, scale):
    sq = 0.0
    for dw, db in grads:
        sq += float(np.sum(dw**2)) + float(np.sum(db**2))
    return scale * math.sqrt(sq)


def train(tf: TrialFunction, pde: PdeProblem, grid: CollocationGrid,
          cfg: TrainConfig) -> TrainReport:
    """Minimize the residual loss; returns the checkpoint trail and final params.

    Full-batch mode iterates plain gradient descent over the train split;
    minibatch mode samples points uniformly per step from the train split.
    Adam uses bias-corrected moments. Stops at the iteration budget or when
    the parameter step norm drops to convergence_tol. Deterministic for a
    fixed seed.
    """
    params = tf.params.copy()
    work = TrialFunction(arch=tf.arch, params=params, strike_ratio=tf.strike_ratio)
    train_pts = grid.train_points
    if len(train_pts) == 0:
        raise DataError("empty train split")
    batch_rng = generator(cfg.seed, "train-batch")

    if cfg.optimizer == "adam":
        m = neural.zero_gradients(params)
        v = neural.zero_gradients(params)

    report = TrainReport()

    def record(step):
        for split, pts in (
            ("train", train_pts),
            ("test", grid.test_points),
            ("full", grid.points),
        ):
            if len(pts) == 0:
                continue
            res = residual_batch(work, pde, pts[:, 0], pts[:, 1], cfg.include_1_over_T)
            mse, rmse, mae = _metrics(res)
            report.checkpoints.append(Checkpoint(step, split, mse, rmse, mae))

    last_finite = None
    for step in range(1, cfg.iterations + 1):
        if cfg.batch == "full":
            pts = train_pts
        else:
            take = min(cfg.batch, len(train_pts))
            pts = train_pts[batch_rng.integers(0, len(train_pts), size=take)]
        grads = loss_gradients(work, pde, pts, cfg.include_1_over_T)

        if cfg.optimizer == "sgd":
            step_sq = 0.0
            for (w, b), (dw, db) in zip(zip(params.weights, params.biases), grads):
                w -= cfg.learning_rate * dw
                b -= cfg.learning_rate * db
                step_sq += float(np.sum(dw**2)) + float(np.sum(db**2))
            step_norm = cfg.learning_rate * math.sqrt(step_sq)
        else:
            bc1 = 1.0 - ADAM_BETA1**step
            bc2 = 1.0 - ADAM_BETA2**step
            step_sq = 0.0
            for i, (dw, db) in enumerate(grads):
                m[i] = (ADAM_BETA1 * m[i][0] + (1 - ADAM_BETA1) * dw,
                        ADAM_BETA1 * m[i][1] + (1 - ADAM_BETA1) * db)
                v[i] = (ADAM_BETA2 * v[i][0] + (1 - ADAM_BETA2) * dw**2,
                        ADAM_BETA2 * v[i][1] + (1 - ADAM_BETA2) * db**2)
                dw_step = cfg.learning_rate * (m[i][0] / bc1) / (np.sqrt(v[i][0] / bc2) + ADAM_EPS)
                db_step = cfg.learning_rate * (m[i][1] / bc1) / (np.sqrt(v[i][1] / bc2) + ADAM_EPS)
                params.weights[i] -= dw_step
                params.biases[i] -= db_step
                step_sq += float(np.sum(dw_step**2)) + float(np.sum(db_step**2))
            step_norm = math.sqrt(step_sq)

        if not all(np.all(np.isfinite(w)) for w in params.weights) or not all(
            np.all(np.isfinite(b)) for b in params.biases
        ):
            report.final_params = last_finite if last_finite is not None else tf.params.copy()
            report.stop_reason = f"non-finite parameters at step {step}"
            error = NumericalError(report.stop_reason)
            error.report = report  # last finite checkpoint rides along
            raise error

        if step == 1 or step % cfg.display_every == 0 or step == cfg.iterations:
            record(step)
            last_finite = params.copy()

        if step_norm <= cfg.convergence_tol:
            if not (step == 1 or step % cfg.display_every == 0 or step == cfg.iterations):
                record(step)
            report.final_params = params
            report.converged = True
            report.stop_reason = f"parameter step norm {step_norm:.3e} <= tol at step {step}"
            return report

    report.final_params = params
    report.converged = False
    report.stop_reason = "iteration budget exhausted"
    return report
