"""Command-line surface: estimate -> train / fd / mc -> price, validate, report.

Parameter files are line-oriented ``key = value`` text so they stay
hand-editable and diff-friendly. Every run emits a JSON manifest recording
the resolved configuration; ``jdpinn rerun <manifest>`` replays it and, in
single-threaded mode, reproduces every artifact byte for byte.

Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure,
4 validation failure. Any flag can be supplied through the environment as
JDPINN_<FLAG-NAME-UPPERCASED-WITH-UNDERSCORES>.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, figures, fd_solver, neural, pinn, pricing, simulate
from .errors import DataError, NumericalError, ValidationError
from .estimation import (
    JumpDiffusionEstimate,
    JumpThresholdConfig,
    SentimentEstimate,
    estimate_jump_diffusion,
    estimate_sentiment,
)
from .market_data import describe, load_price_csv, load_trend_csv, log_returns
from .model import MarketModel, SentimentPathPolicy, build_pde
from .rngutil import sub_seed

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4

ENV_PREFIX = "JDPINN_"

PARAM_KEYS = (
    "mu_d", "sigma_d", "lambda", "k", "mu_j", "delta_j",
    "mu_p", "sigma_p", "phi0", "tau", "rate", "strike", "s_max",
    "maturity", "day_count", "policy",
)
SENTIMENT_KEYS = ("mu_p", "sigma_p")


# ---------------------------------------------------------------- param files

def write_param_file(path, values: dict):
    lines = [f"{key} = {values[key]}" for key in PARAM_KEYS if key in values]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_param_file(path):
    """Parse a param file into (MarketModel, SentimentPathPolicy)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: file not found")
    raw = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in PARAM_KEYS:
            raise DataError(f"{path}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise DataError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = value
    missing = [k for k in PARAM_KEYS if k not in raw]
    if missing:
        raise DataError(f"{path}: missing keys: {', '.join(missing)}")
    try:
        jd = JumpDiffusionEstimate(
            mu_d=float(raw["mu_d"]),
            sigma_d=float(raw["sigma_d"]),
            lam=float(raw["lambda"]),
            k=float(raw["k"]),
            mu_j=float(raw["mu_j"]),
            delta_j=float(raw["delta_j"]),
        )
        sp = SentimentEstimate(mu_p=float(raw["mu_p"]), sigma_p=float(raw["sigma_p"]))
        model = MarketModel(
            jd=jd,
            sp=sp,
            phi0=float(raw["phi0"]),
            tau=float(raw["tau"]),
            rate=float(raw["rate"]),
            strike=float(raw["strike"]),
            s_max=float(raw["s_max"]),
            maturity=float(raw["maturity"]),
            day_count=int(raw["day_count"]),
        )
        policy = SentimentPathPolicy(raw["policy"])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    return model, policy


def model_to_param_values(model: MarketModel, policy: SentimentPathPolicy) -> dict:
    return {
        "mu_d": repr(model.jd.mu_d),
        "sigma_d": repr(model.jd.sigma_d),
        "lambda": repr(model.jd.lam),
        "k": repr(model.jd.k),
        "mu_j": repr(model.jd.mu_j),
        "delta_j": repr(model.jd.delta_j),
        "mu_p": repr(model.sp.mu_p),
        "sigma_p": repr(model.sp.sigma_p),
        "phi0": repr(model.phi0),
        "tau": repr(model.tau),
        "rate": repr(model.rate),
        "strike": repr(model.strike),
        "s_max": repr(model.s_max),
        "maturity": repr(model.maturity),
        "day_count": str(model.day_count),
        "policy": policy.kind,
    }


# ------------------------------------------------------------------ manifests

def write_manifest(command, args_dict, artifacts, started, manifest_path):
    manifest = {
        "command": command,
        "resolved": {k: v for k, v in sorted(args_dict.items())},
        "seed": args_dict.get("seed"),
        "artifacts": [str(p) for p in artifacts],
        "wall_clock_s": round(time.time() - started, 3),
        "version": __version__,
    }
    Path(manifest_path).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest_path


def _manifest_path_for(primary_artifact):
    p = Path(primary_artifact)
    return p.with_name(p.name + ".manifest.json")


# ------------------------------------------------------------------- helpers

def _env_name(flag: str) -> str:
    return ENV_PREFIX + flag.lstrip("-").upper().replace("-", "_")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add(parser, flag, **kwargs):
    """add_argument with an environment-variable fallback for the default."""
    env = os.environ.get(_env_name(flag))
    if env is not None:
        if kwargs.get("action") == "store_true":
            kwargs["default"] = env.lower() in ("1", "true", "yes", "on")
        else:
            typ = kwargs.get("type", str)
            kwargs["default"] = typ(env)
        kwargs.pop("required", None)
    parser.add_argument(flag, **kwargs)


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _fmt(x):
    if isinstance(x, float) and math.isnan(x):
        return "not available"
    return f"{x:.6g}" if isinstance(x, float) else str(x)


def _parse_grid(text):
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise DataError(f"bad grid spec {text!r}, expected like 200x200") from None


def _surface_rows(surface):
    rows = []
    for j, t in enumerate(surface.t_nodes):
        for i, s in enumerate(surface.s_nodes):
            rows.append((
                f"{t:.10g}", f"{s:.10g}",
                repr(float(surface.values_normalized[j, i])),
                f"{surface.values_dollars[j, i]:.2f}",
            ))
    return rows


# ----------------------------------------------------------------- commands

def cmd_estimate(args):
    started = time.time()
    prices = load_price_csv(args.prices)
    rets = log_returns(prices, day_count=args.day_count)
    est = estimate_jump_diffusion(rets, JumpThresholdConfig(args.threshold))
    stats_rows = [("prices", describe(rets))]

    partial = False
    sent = None
    if args.trend and Path(args.trend).exists():
        trend = load_trend_csv(args.trend)
        trend_rets = log_returns(trend, day_count=args.day_count)
        sent = estimate_sentiment(trend_rets)
        stats_rows.append(("trend", describe(trend_rets)))
    else:
        partial = True

    s_max = args.s_max if args.s_max is not None else float(np.max(prices.closes))
    strike = args.strike if args.strike is not None else 0.5 * s_max
    maturity = args.maturity if args.maturity is not None else rets.period_years

    values = {
        "mu_d": repr(est.mu_d), "sigma_d": repr(est.sigma_d),
        "lambda": repr(est.lam), "k": repr(est.k),
        "mu_j": repr(est.mu_j), "delta_j": repr(est.delta_j),
        "phi0": repr(args.phi0), "tau": repr(args.tau), "rate": repr(args.rate),
        "strike": repr(strike), "s_max": repr(s_max), "maturity": repr(maturity),
        "day_count": str(args.day_count), "policy": args.policy,
    }
    if sent is not None:
        values["mu_p"] = repr(sent.mu_p)
        values["sigma_p"] = repr(sent.sigma_p)
    write_param_file(args.out, values)

    stats_path = Path(args.out).with_suffix(".stats.csv")
    header = ["statistic"] + [name for name, _ in stats_rows]
    fields = ("count", "mean", "min", "q1", "median", "q3", "max",
              "std_dev", "skewness", "kurtosis")
    table = [[f] + [_fmt(getattr(st, f)) for _, st in stats_rows] for f in fields]
    _write_csv(stats_path, header, table)
    artifacts = [args.out, stats_path]

    if not args.no_figures:
        fig_path = Path(args.out).with_suffix(".png")
        figures.render_series(fig_path, prices.dates, prices.closes, rets.values)
        artifacts.append(fig_path)

    print(f"jumps detected: {est.jump_count}  lambda = {_fmt(est.lam)} per year")
    print(f"mu_d = {_fmt(est.mu_d)}  sigma_d = {_fmt(est.sigma_d)}  k = {_fmt(est.k)}")
    if sent is not None:
        print(f"mu_p = {_fmt(sent.mu_p)}  sigma_p = {_fmt(sent.sigma_p)}")
    write_manifest("estimate", vars(args) | {"func": None}, artifacts, started,
                   args.manifest or _manifest_path_for(args.out))
    if partial:
        print("trend data missing: sentiment keys absent, partial estimate",
              file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def _train_once(model, policy, args):
    pde = build_pde(model, policy, variant=args.model)
    arch = neural.NetworkArchitecture(
        layer_sizes=tuple(int(x) for x in args.layers.split("-")),
        activation=args.activation,
    )
    params = neural.init_params(arch, seed=sub_seed(args.seed, "neural-init"))
    tf = pinn.TrialFunction(arch=arch, params=params, strike_ratio=model.strike_ratio)
    n_t, n_s = _parse_grid(args.grid)
    grid = pinn.make_grid(n_s, n_t, args.split, seed=sub_seed(args.seed, "grid-split"))
    cfg = pinn.TrainConfig(
        optimizer=args.optimizer,
        learning_rate=args.lr,
        iterations=args.iters,
        batch="full" if args.batch == "full" else int(args.batch),
        seed=sub_seed(args.seed, "train-batch"),
        convergence_tol=args.convergence_tol,
        display_every=args.display_every,
        include_1_over_T=not args.no_time_scale,
    )
    report = pinn.train(tf, pde, grid, cfg)
    return arch, report, grid


def cmd_train(args):
    started = time.time()
    model, policy = read_param_file(args.params)
    try:
        arch, report, _ = _train_once(model, policy, args)
    except NumericalError as exc:
        # divergence: preserve the last finite checkpoint before exiting 3
        report = getattr(exc, "report", None)
        if report is not None and report.final_params is not None:
            arch = neural.NetworkArchitecture(
                layer_sizes=tuple(int(x) for x in args.layers.split("-")),
                activation=args.activation,
            )
            neural.save_weights(args.out_weights, arch, report.final_params)
            rows = [(c.step, repr(c.mse), repr(c.rmse), repr(c.mae), c.split)
                    for c in report.checkpoints]
            _write_csv(args.metrics, ("step", "mse", "rmse", "mae", "split"), rows)
        raise
    neural.save_weights(args.out_weights, arch, report.final_params)
    rows = [
        (c.step, repr(c.mse), repr(c.rmse), repr(c.mae), c.split)
        for c in report.checkpoints
    ]
    _write_csv(args.metrics, ("step", "mse", "rmse", "mae", "split"), rows)
    artifacts = [args.out_weights, args.metrics]
    if not args.no_figures:
        fig_path = Path(args.metrics).with_suffix(".png")
        figures.render_metrics(fig_path, [(c.step, c.mse, c.rmse, c.mae, c.split)
                                          for c in report.checkpoints])
        artifacts.append(fig_path)
    final = report.series("train")[-1]
    print(f"final train metrics: mse={final.mse:.6e} rmse={final.rmse:.6e} mae={final.mae:.6e}")
    print(f"stop: {report.stop_reason}")
    write_manifest("train", vars(args) | {"func": None}, artifacts, started,
                   args.manifest or _manifest_path_for(args.out_weights))
    return EXIT_OK


def cmd_price(args):
    started = time.time()
    model, policy = read_param_file(args.params)
    sources = [bool(args.weights), args.fd, args.mc]
    if sum(sources) > 1:
        raise DataError("pick at most one of --weights, --fd, --mc")
    if sum(sources) == 0:
        args.fd = True  # deterministic default source
    if args.weights:
        arch, params = neural.load_weights(args.weights)
        tf = pinn.TrialFunction(arch=arch, params=params, strike_ratio=model.strike_ratio)
        surface = pricing.surface_from_solution(tf, model, n_s=args.surface_n, n_t=args.surface_n)
    elif args.fd:
        pde = build_pde(model, policy, variant=args.model)
        sol = fd_solver.solve_crank_nicolson(pde, fd_solver.FdGrid(*_parse_grid(args.grid)))
        surface = pricing.surface_from_solution(sol, model)
    else:
        pde = build_pde(model, policy, variant=args.model)
        surface = pricing.surface_from_solution(
            pde, model, n_s=args.surface_n, n_t=args.surface_n, mc_paths=args.paths,
            mc_cfg=simulate.PathConfig(n_steps=args.mc_steps, horizon=model.maturity,
                                       seed=sub_seed(args.seed, "mc-path")),
            threads=args.threads,
        )
    t_row = 1.0 if args.tenor is None else args.tenor / model.maturity
    if not 0.0 <= t_row <= 1.0:
        raise DataError("tenor outside [0, maturity]")
    quote = pricing.interpolate_spot(surface, args.spot, t_row)
    print(f"spot={quote.spot_dollars:.2f} strike={quote.strike_dollars:.2f} "
          f"tenor={quote.tenor_years:.4f}y value={quote.value_dollars:.2f} "
          f"source={quote.source}")
    artifacts = []
    if args.surface_out:
        _write_csv(args.surface_out, ("t", "s", "value_normalized", "value_dollars"),
                   _surface_rows(surface))
        artifacts.append(args.surface_out)
        if not args.no_figures:
            fig_path = Path(args.surface_out).with_suffix(".png")
            figures.render_surface(fig_path, surface)
            artifacts.append(fig_path)
    if artifacts:
        write_manifest("price", vars(args) | {"func": None}, artifacts, started,
                       args.manifest or _manifest_path_for(artifacts[0]))
    return EXIT_OK


def _kink_guarded_probes(pde, t, base=(0.25, 0.5, 0.75), guard=0.06):
    """Probe prices for one time row, pushed off the payoff-kink trajectory.

    The kink starts at the strike ratio and advects to kappa * exp(-T int eta)
    by row t; probes inside that band plus a guard margin move just outside it.
    """
    ts = np.linspace(0.0, t, 17) if t > 0 else np.array([0.0])
    eta_bar = float(np.mean(np.asarray(pde.eta(ts), dtype=float)))
    kappa = pde.strike_ratio
    kink = kappa * math.exp(-eta_bar * pde.maturity * t)
    lo = min(kink, kappa) - guard
    hi = max(kink, kappa) + guard
    probes = []
    for s in base:
        if lo <= s <= hi:
            s = hi if (hi - s) <= (s - lo) else lo
            s = min(max(s, 0.05), 0.95)
        probes.append(s)
    return probes


def cmd_validate(args):
    started = time.time()
    model, policy = read_param_file(args.params)
    n_s, n_t = _parse_grid(args.grid)
    failures = []
    lines = []

    # Reduction case vs closed form on the same contract geometry.
    reduction = MarketModel(
        jd=JumpDiffusionEstimate(mu_d=0.0, sigma_d=0.2, lam=0.0, k=0.0,
                                 mu_j=math.nan, delta_j=math.nan),
        sp=SentimentEstimate(mu_p=0.0, sigma_p=0.0),
        phi0=1.0, tau=0.0, rate=0.05, strike=0.5, s_max=1.0, maturity=1.0, day_count=1,
    )
    pde_red = build_pde(reduction, SentimentPathPolicy("frozen"), variant="bs")
    sol_red = fd_solver.solve_crank_nicolson(pde_red, fd_solver.FdGrid(n_s, n_t))
    s_nodes = sol_red.grid.s_nodes
    mask = (s_nodes >= 0.2) & (s_nodes <= 0.8)
    worst = 0.0
    for j, tj in enumerate(sol_red.grid.t_nodes):
        cf = np.array([simulate.closed_form_bs(si, 0.5, 0.05, 0.2, tj)
                       for si in s_nodes[mask]])
        worst = max(worst, float(np.max(np.abs(sol_red.values[j][mask] - cf))))
    ok = worst <= 0.005
    lines.append(f"fd-vs-closed-form   max_err={worst:.3e}  gate=5e-3   {'PASS' if ok else 'FAIL'}")
    if not ok:
        failures.append("fd-vs-closed-form")

    # Configured model: FD vs Monte Carlo at nine probes. Probes dodge the
    # transported payoff-kink band, where the difference scheme concentrates
    # its discretization error by construction and the comparison would
    # measure that artifact instead of solver agreement.
    pde = build_pde(model, policy, variant="jmd")
    sol = fd_solver.solve_crank_nicolson(pde, fd_solver.FdGrid(n_s, n_t))
    cfg = simulate.PathConfig(n_steps=args.mc_steps, horizon=model.maturity,
                              seed=sub_seed(args.seed, "mc-path"))
    worst_z = 0.0
    for tt in (0.25, 0.5, 0.75):
        for ss in _kink_guarded_probes(pde, tt):
            fd_v = sol.at(tt, ss)
            mc = simulate.feynman_kac_price(pde, ss, tt, args.paths, cfg,
                                            threads=args.threads)
            gap = abs(fd_v - mc.value)
            z = gap / mc.std_error if mc.std_error > 0 else (0.0 if gap == 0 else math.inf)
            worst_z = max(worst_z, z)
            lines.append(f"probe t={tt} s={ss:.3f}: fd={fd_v:.6f} mc={mc.value:.6f} "
                         f"se={mc.std_error:.2e} z={z:.2f}")
    ok = worst_z <= 3.0
    lines.append(f"fd-vs-mc            worst_z={worst_z:.2f}   gate=3      {'PASS' if ok else 'FAIL'}")
    if not ok:
        failures.append("fd-vs-mc")

    # Trained network vs the FD surface.
    if args.weights:
        arch, params = neural.load_weights(args.weights)
    else:
        t_args = argparse.Namespace(
            model="jmd", layers=args.layers, activation="sigmoid",
            optimizer=args.optimizer, lr=1e-3, iters=args.iters, grid="10x10",
            split=1.0, seed=args.seed, convergence_tol=1e-8, display_every=500,
            batch="full", no_time_scale=False,
        )
        arch, report, _ = _train_once(model, policy, t_args)
        params = report.final_params
    tf = pinn.TrialFunction(arch=arch, params=params, strike_ratio=model.strike_ratio)
    t_grid = np.arange(1, 11) / 10.0
    tt, ss = np.meshgrid(t_grid, t_grid, indexing="ij")
    zeta = pinn.trial_eval_batch(tf, tt.ravel(), ss.ravel())
    fd_vals = np.array([sol.at(a, b) for a, b in zip(tt.ravel(), ss.ravel())])
    mae = float(np.mean(np.abs(zeta - fd_vals)))
    ok = mae <= 0.02
    lines.append(f"pinn-vs-fd          mae={mae:.4f}      gate=0.02   {'PASS' if ok else 'FAIL'}")
    if not ok:
        failures.append("pinn-vs-fd")

    print("\n".join(lines))
    write_manifest("validate", vars(args) | {"func": None}, [], started,
                   args.manifest or Path(args.params).with_suffix(".validate.manifest.json"))
    if failures:
        raise ValidationError("validation failed: " + ", ".join(failures))
    return EXIT_OK


def cmd_delay_sweep(args):
    started = time.time()
    model, policy = read_param_file(args.params)
    tau_days = [float(x) for x in args.taus.split(",") if x.strip()]
    taus = [pricing.tau_years_from_days(d, model.day_count) for d in tau_days]
    rows = pricing.delay_sweep(model, policy, taus, spot_dollars=args.spot,
                               solver=args.solver, mode=args.mode,
                               fd_grid=_parse_grid(args.grid), seed=args.seed)
    print("tau_days,tau_years,value_dollars")
    for days, (tau, value) in zip(tau_days, rows):
        print(f"{days:g},{tau:.6f},{value:.4f}")
    artifacts = []
    if args.out:
        _write_csv(args.out, ("tau_days", "tau_years", "value_dollars"),
                   [(f"{d:g}", f"{tau:.10g}", f"{v:.4f}")
                    for d, (tau, v) in zip(tau_days, rows)])
        artifacts.append(args.out)
        if not args.no_figures:
            fig_path = Path(args.out).with_suffix(".png")
            figures.render_sweep(fig_path, [r[0] for r in rows], [r[1] for r in rows])
            artifacts.append(fig_path)
        write_manifest("delay-sweep", vars(args) | {"func": None}, artifacts, started,
                       args.manifest or _manifest_path_for(args.out))
    return EXIT_OK


def cmd_compare(args):
    started = time.time()
    model, policy = read_param_file(args.params)
    s_dollars, tables = pricing.compare_models(
        model, policy, fd_grid=_parse_grid(args.grid), solver=args.solver, seed=args.seed
    )
    header = ("s_dollars", "bs_t1", "bs_t2", "bs_t3", "jmd_t1", "jmd_t2", "jmd_t3")
    rows = []
    for i, s in enumerate(s_dollars):
        rows.append((f"{s:.2f}",
                     *(f"{tables['bs'][i, c]:.2f}" for c in range(3)),
                     *(f"{tables['jmd'][i, c]:.2f}" for c in range(3))))
    print(",".join(header))
    for row in rows:
        print(",".join(row))
    artifacts = []
    if args.out:
        _write_csv(args.out, header, rows)
        artifacts.append(args.out)
        if not args.no_figures:
            fig_path = Path(args.out).with_suffix(".png")
            figures.render_comparison(fig_path, s_dollars, tables, pricing.TABLE_T_ROWS)
            artifacts.append(fig_path)
        write_manifest("compare", vars(args) | {"func": None}, artifacts, started,
                       args.manifest or _manifest_path_for(args.out))
    return EXIT_OK


def cmd_simulate(args):
    started = time.time()
    model, policy = read_param_file(args.params)
    artifacts = []
    if args.path_out:
        cfg = simulate.PathConfig(n_steps=args.steps, horizon=model.maturity,
                                  seed=sub_seed(args.seed, "jump-path"),
                                  scheme=args.scheme)
        path = simulate.simulate_jump_diffusion(model, cfg, s0=args.s0)
        rows = [(f"{t:.10g}", repr(float(s)), repr(float(p)))
                for t, s, p in zip(path.times, path.s_values, path.p_values)]
        _write_csv(args.path_out, ("t", "s", "p"), rows)
        artifacts.append(args.path_out)
        print(f"path written: {len(rows)} nodes, {len(path.jump_times)} jumps")
    if args.mc_spot is not None:
        pde = build_pde(model, policy, variant=args.model)
        t_row = 1.0 if args.tenor is None else args.tenor / model.maturity
        cfg = simulate.PathConfig(n_steps=args.steps, horizon=model.maturity,
                                  seed=sub_seed(args.seed, "mc-path"),
                                  antithetic=args.antithetic)
        est = simulate.feynman_kac_price(pde, args.mc_spot / model.s_max, t_row,
                                         args.paths, cfg, threads=args.threads)
        print(f"{model.s_max * est.value},{model.s_max * est.std_error},{est.n_paths}")
    if not args.path_out and args.mc_spot is None:
        raise DataError("nothing to do: pass --path-out and/or --mc-spot")
    if artifacts:
        write_manifest("simulate", vars(args) | {"func": None}, artifacts, started,
                       args.manifest or _manifest_path_for(artifacts[0]))
    return EXIT_OK


def cmd_rerun(args):
    manifest = json.loads(Path(args.manifest_file).read_text(encoding="utf-8"))
    command = manifest["command"]
    resolved = dict(manifest["resolved"])
    resolved.pop("func", None)
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for key, value in list(resolved.items()):
            if key in ("out", "out_weights", "metrics", "surface_out", "manifest") and value:
                resolved[key] = str(out_dir / Path(value).name)
        if not resolved.get("manifest"):
            resolved["manifest"] = str(out_dir / (Path(args.manifest_file).name))
    handler = {
        "estimate": cmd_estimate,
        "train": cmd_train,
        "price": cmd_price,
        "validate": cmd_validate,
        "delay-sweep": cmd_delay_sweep,
        "compare": cmd_compare,
        "simulate": cmd_simulate,
    }[command]
    return handler(argparse.Namespace(**resolved))


# -------------------------------------------------------------------- parser

def build_parser():
    parser = _Parser(prog="jdpinn", description=__doc__)
    parser.add_argument("--version", action="version", version=f"jdpinn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        _add(p, "--seed", type=int, default=0)
        _add(p, "--threads", type=int, default=1)
        _add(p, "--manifest", default=None)
        _add(p, "--no-figures", action="store_true", default=False)

    p = sub.add_parser("estimate", help="estimate parameters from CSV data")
    _add(p, "--prices", required=True)
    _add(p, "--trend", default=None)
    _add(p, "--threshold", type=float, default=0.07)
    _add(p, "--day-count", type=int, default=365)
    _add(p, "--out", required=True)
    _add(p, "--phi0", type=float, default=0.01)
    _add(p, "--tau", type=float, default=0.0)
    _add(p, "--rate", type=float, default=0.04)
    _add(p, "--strike", type=float, default=None)
    _add(p, "--s-max", type=float, default=None)
    _add(p, "--maturity", type=float, default=None)
    _add(p, "--policy", default="mean-path")
    common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("train", help="train the trial-solution network")
    _add(p, "--params", required=True)
    _add(p, "--model", choices=("bs", "jmd"), default="jmd")
    _add(p, "--grid", default="10x10")
    _add(p, "--layers", default="2-64-32-16-8-1")
    _add(p, "--activation", choices=("sigmoid", "tanh", "relu"), default="sigmoid")
    _add(p, "--optimizer", choices=("sgd", "adam"), default="sgd")
    _add(p, "--lr", type=float, default=1e-3)
    _add(p, "--iters", type=int, default=10000)
    _add(p, "--batch", default="full")
    _add(p, "--split", type=float, default=0.8)
    _add(p, "--convergence-tol", type=float, default=1e-8)
    _add(p, "--display-every", type=int, default=500)
    _add(p, "--no-time-scale", action="store_true", default=False)
    _add(p, "--out-weights", required=True)
    _add(p, "--metrics", required=True)
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("price", help="quote an option from a solved surface")
    _add(p, "--params", required=True)
    _add(p, "--weights", default=None)
    _add(p, "--fd", action="store_true", default=False)
    _add(p, "--mc", action="store_true", default=False)
    _add(p, "--model", choices=("bs", "jmd"), default="jmd")
    _add(p, "--grid", default="200x200")
    _add(p, "--paths", type=int, default=20000)
    _add(p, "--mc-steps", type=int, default=100)
    _add(p, "--surface-n", type=int, default=10)
    _add(p, "--spot", type=float, required=True)
    _add(p, "--tenor", type=float, default=None)
    _add(p, "--surface-out", default=None)
    common(p)
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("validate", help="cross-check fd, mc and the trained network")
    _add(p, "--params", required=True)
    _add(p, "--grid", default="400x400")
    _add(p, "--paths", type=int, default=20000)
    _add(p, "--mc-steps", type=int, default=250)
    _add(p, "--weights", default=None)
    _add(p, "--layers", default="2-64-32-16-8-1")
    _add(p, "--optimizer", choices=("sgd", "adam"), default="adam")
    _add(p, "--iters", type=int, default=10000)
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("delay-sweep", help="option value as a function of the delay")
    _add(p, "--params", required=True)
    _add(p, "--taus", default="5,10,15,20")
    _add(p, "--mode", choices=("effective-maturity", "sentiment-shift"),
         default="effective-maturity")
    _add(p, "--solver", choices=("fd", "pinn", "mc"), default="fd")
    _add(p, "--grid", default="200x200")
    _add(p, "--spot", type=float, required=True)
    _add(p, "--out", default=None)
    common(p)
    p.set_defaults(func=cmd_delay_sweep)

    p = sub.add_parser("compare", help="side-by-side bs vs jmd value table")
    _add(p, "--params", required=True)
    _add(p, "--grid", default="180x180")
    _add(p, "--solver", choices=("fd", "pinn"), default="fd")
    _add(p, "--out", default=None)
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="dump sample paths or print a raw MC value")
    _add(p, "--params", required=True)
    _add(p, "--path-out", default=None)
    _add(p, "--s0", type=float, default=None)
    _add(p, "--scheme", choices=("euler", "exact"), default="exact")
    _add(p, "--steps", type=int, default=250)
    _add(p, "--mc-spot", type=float, default=None)
    _add(p, "--tenor", type=float, default=None)
    _add(p, "--paths", type=int, default=20000)
    _add(p, "--model", choices=("bs", "jmd"), default="jmd")
    _add(p, "--antithetic", action="store_true", default=False)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("rerun", help="replay a run from its manifest")
    p.add_argument("manifest_file")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_rerun)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValidationError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
