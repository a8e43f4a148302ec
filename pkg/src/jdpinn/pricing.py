"""Deliverables on top of the solvers: surfaces, quotes, comparisons, sweeps.

Surfaces carry both normalized values and their S_max-scaled dollar view;
the time axis is the remaining-time fraction t, so the calendar time of a
row is t' = T (1 - t). Quotes come from linear interpolation in price along
one time row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fd_solver, pinn, simulate
from .errors import DataError
from .model import MarketModel, SentimentPathPolicy, build_pde

TRADING_DAYS_EQUITY = 252
TABLE_T_ROWS = (1.0 / 3.0, 2.0 / 3.0, 1.0)


@dataclass(frozen=True)
class PriceSurface:
    t_nodes: np.ndarray  # remaining-time fractions, ascending
    s_nodes: np.ndarray  # normalized prices, ascending
    values_normalized: np.ndarray  # shape (len(t_nodes), len(s_nodes))
    s_max: float
    maturity: float
    strike: float
    source: str  # pinn | fd | mc

    @property
    def values_dollars(self) -> np.ndarray:
        return self.s_max * self.values_normalized

    @property
    def s_dollars(self) -> np.ndarray:
        return self.s_max * self.s_nodes


@dataclass(frozen=True)
class OptionQuote:
    spot_dollars: float
    strike_dollars: float
    tenor_years: float
    value_dollars: float
    source: str


def surface_from_solution(solution, model: MarketModel, n_s: int = 10, n_t: int = 10,
                          mc_paths: int = 20000, mc_cfg=None, threads: int = 1) -> PriceSurface:
    """Evaluate a solved problem on a lattice and attach dollar scaling.

    Accepts an FdSolution (grid nodes taken as-is), a TrialFunction
    (evaluated on an n_t x n_s lattice), or a PdeProblem (priced pointwise by
    the Monte Carlo estimator; expensive, meant for coarse grids).
    """
    if isinstance(solution, fd_solver.FdSolution):
        return PriceSurface(
            t_nodes=solution.grid.t_nodes,
            s_nodes=solution.grid.s_nodes,
            values_normalized=solution.values.copy(),
            s_max=model.s_max,
            maturity=model.maturity,
            strike=model.strike,
            source="fd",
        )
    if isinstance(solution, pinn.TrialFunction):
        t = np.arange(n_t + 1) / n_t
        s = np.arange(n_s + 1) / n_s
        tt, ss = np.meshgrid(t, s, indexing="ij")
        vals = pinn.trial_eval_batch(solution, tt.ravel(), ss.ravel()).reshape(tt.shape)
        return PriceSurface(t, s, vals, model.s_max, model.maturity, model.strike, "pinn")
    # PdeProblem -> Monte Carlo surface
    pde = solution
    t = np.arange(n_t + 1) / n_t
    s = np.arange(n_s + 1) / n_s
    cfg = mc_cfg or simulate.PathConfig(n_steps=100, horizon=model.maturity, seed=0)
    vals = np.empty((n_t + 1, n_s + 1))
    for j, tj in enumerate(t):
        for i, si in enumerate(s):
            vals[j, i] = simulate.feynman_kac_price(pde, si, tj, mc_paths, cfg,
                                                    threads=threads).value
    return PriceSurface(t, s, vals, model.s_max, model.maturity, model.strike, "mc")


def interpolate_spot(surface: PriceSurface, spot_dollars: float, t_row: float) -> OptionQuote:
    """Linear interpolation in price along the time row nearest to t_row."""
    if not 0.0 <= spot_dollars <= surface.s_max:
        raise DataError(f"spot {spot_dollars:g} outside [0, {surface.s_max:g}]")
    if not 0.0 <= t_row <= 1.0:
        raise DataError("t_row outside [0, 1]")
    j = int(np.argmin(np.abs(surface.t_nodes - t_row)))
    value_norm = float(
        np.interp(spot_dollars / surface.s_max, surface.s_nodes, surface.values_normalized[j])
    )
    return OptionQuote(
        spot_dollars=spot_dollars,
        strike_dollars=surface.strike,
        tenor_years=surface.maturity * float(surface.t_nodes[j]),
        value_dollars=surface.s_max * value_norm,
        source=surface.source,
    )


def _solve_surface(model, policy, solver, variant="jmd", fd_grid=(200, 200),
                   pinn_cfg=None, seed=0, mc_paths=20000):
    pde = build_pde(model, policy, variant=variant)
    if solver == "fd":
        sol = fd_solver.solve_crank_nicolson(pde, fd_solver.FdGrid(*fd_grid))
        return surface_from_solution(sol, model)
    if solver == "pinn":
        from . import neural

        arch = neural.NetworkArchitecture((2, 64, 32, 16, 8, 1), "sigmoid")
        tf = pinn.TrialFunction(arch=arch, params=neural.init_params(arch, seed),
                                strike_ratio=model.strike_ratio)
        grid = pinn.make_grid(10, 10, 0.8, seed=seed)
        cfg = pinn_cfg or pinn.TrainConfig(seed=seed)
        rep = pinn.train(tf, pde, grid, cfg)
        trained = pinn.TrialFunction(arch=arch, params=rep.final_params,
                                     strike_ratio=model.strike_ratio)
        return surface_from_solution(trained, model)
    if solver == "mc":
        return surface_from_solution(pde, model, mc_paths=mc_paths,
                                     mc_cfg=simulate.PathConfig(n_steps=100,
                                                                horizon=model.maturity,
                                                                seed=seed))
    raise DataError(f"unknown solver {solver!r}")


def delay_sweep(model: MarketModel, policy: SentimentPathPolicy, taus, spot_dollars: float,
                solver: str = "fd", mode: str = "effective-maturity",
                fd_grid=(200, 200), seed: int = 0):
    """Re-price the contract for each delay value.

    effective-maturity mode shortens the contract to T - tau; sentiment-shift
    mode keeps T and lags the sentiment argument by tau instead. Returns rows
    (tau_years, value_dollars) in input order.
    """
    if mode not in ("effective-maturity", "sentiment-shift"):
        raise DataError(f"unknown delay mode {mode!r}")
    rows = []
    for tau in taus:
        if tau < 0.0:
            raise DataError("tau must be nonnegative")
        if tau >= model.maturity:
            raise DataError(f"tau {tau} >= maturity {model.maturity}")
        if mode == "effective-maturity":
            varied = model.with_maturity(model.maturity - tau)
        else:
            varied = model.with_tau(tau)
        surface = _solve_surface(varied, policy, solver, fd_grid=fd_grid, seed=seed)
        quote = interpolate_spot(surface, spot_dollars, t_row=1.0)
        rows.append((float(tau), quote.value_dollars))
    return rows


def compare_models(model: MarketModel, policy: SentimentPathPolicy,
                   fd_grid=(180, 180), t_rows=TABLE_T_ROWS, n_price_rows: int = 9,
                   solver: str = "fd", seed: int = 0):
    """Side-by-side surfaces with and without the excess-drift/source terms.

    Both problems are solved with identical settings. Returns (s_dollars row
    labels, {"bs": matrix, "jmd": matrix}) where each matrix has one column
    per requested time row.
    """
    s_fracs = np.arange(1, n_price_rows + 1) / n_price_rows
    out = {}
    for variant in ("bs", "jmd"):
        surface = _solve_surface(model, policy, solver, variant=variant,
                                 fd_grid=fd_grid, seed=seed)
        mat = np.empty((n_price_rows, len(t_rows)))
        for col, tr in enumerate(t_rows):
            for row, sf in enumerate(s_fracs):
                mat[row, col] = interpolate_spot(
                    surface, sf * model.s_max, t_row=tr
                ).value_dollars
        out[variant] = mat
    return s_fracs * model.s_max, out


def tau_years_from_days(days: float, day_count: int) -> float:
    """Trading-day delays: 252 denominator for equities, 365 otherwise."""
    denom = TRADING_DAYS_EQUITY if day_count == TRADING_DAYS_EQUITY else 365
    return days / denom
