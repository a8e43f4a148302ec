"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Runs at desk scale on a single thread. Three gates are asserted at their
stated tolerances and are expected to fail for structural reasons analyzed
in the README's known-failing-gates section: the plain-gradient-descent
MAE gate (criterion 6), the synthetic threshold-recovery tolerances
(criterion 7), and the delay-ordering of the NVDA contract (criterion 10).
"""

import csv
import math
import time

import numpy as np
import pytest

from jdpinn import cli, fd_solver, neural, pinn, pricing, simulate
from jdpinn.estimation import (
    JumpDiffusionEstimate,
    JumpThresholdConfig,
    SentimentEstimate,
    estimate_jump_diffusion,
)
from jdpinn.market_data import ReturnSeries
from jdpinn.model import FROZEN, MEAN_PATH, MarketModel, build_pde

S_MAX = 63577.0
STRIKE = 30000.0
CAP_DOLLARS = 33577.0


def paper_model(**overrides):
    mu_j = math.log(1 - 0.002195)
    defaults = dict(
        jd=JumpDiffusionEstimate(mu_d=-0.00241, sigma_d=0.04132, lam=31.8,
                                 k=math.exp(mu_j) - 1, mu_j=mu_j, delta_j=0.0),
        sp=SentimentEstimate(mu_p=0.01033, sigma_p=0.20934),
        phi0=0.01, tau=0.0, rate=0.04, strike=STRIKE, s_max=S_MAX,
        maturity=5.0, day_count=365,
    )
    defaults.update(overrides)
    return MarketModel(**defaults)


def reduction_model(rate=0.05):
    return MarketModel(
        jd=JumpDiffusionEstimate(mu_d=0.0, sigma_d=0.2, lam=0.0, k=0.0,
                                 mu_j=math.nan, delta_j=math.nan),
        sp=SentimentEstimate(mu_p=0.0, sigma_p=0.0),
        phi0=1.0, tau=0.0, rate=rate, strike=0.5, s_max=1.0, maturity=1.0,
        day_count=1,
    )


def report(criterion, ok, detail):
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def random_trial(seed, kappa, layers=(2, 8, 1)):
    arch = neural.NetworkArchitecture(layers, "sigmoid")
    params = neural.init_params(arch, seed=seed)
    rng = np.random.default_rng(seed)
    for b in params.biases:
        b += rng.normal(0, 0.5, size=b.shape)
    return pinn.TrialFunction(arch=arch, params=params, strike_ratio=kappa)


def test_criterion_1_boundary_identity():
    """Every solver prices the cap row at exactly S_max - E dollars."""
    model = paper_model()
    kappa = model.strike_ratio
    tol = 1e-9 * CAP_DOLLARS
    worst = 0.0

    for seed in range(5):
        tf = random_trial(seed, kappa)
        for t in (0.0, 0.25, 0.5, 0.75, 1.0):
            worst = max(worst, abs(S_MAX * pinn.trial_eval(tf, t, 1.0) - CAP_DOLLARS))

    pde = build_pde(model, MEAN_PATH)
    sol = fd_solver.solve_crank_nicolson(pde, fd_solver.FdGrid(100, 100))
    worst = max(worst, float(np.max(np.abs(S_MAX * sol.values[:, -1] - CAP_DOLLARS))))

    for t in (0.3, 1.0):
        mc = simulate.feynman_kac_price(pde, 1.0, t, 1000,
                                        simulate.PathConfig(n_steps=10, horizon=5.0, seed=0))
        worst = max(worst, abs(S_MAX * mc.value - CAP_DOLLARS))

    assert report(1, worst <= tol, f"max |V(t, S_max) - 33577.00| = {worst:.2e} $")


def test_criterion_2_hard_constraints():
    """A thousand random parameter sets satisfy all three conditions to 1e-12."""
    started = time.time()
    rng = np.random.default_rng(0)
    worst = 0.0
    grid = np.linspace(0.0, 1.0, 21)
    zeros, ones = np.zeros_like(grid), np.ones_like(grid)
    for k in range(1000):
        kappa = float(rng.uniform(0.02, 0.98))
        tf = random_trial(k, kappa)
        ic = np.abs(pinn.trial_eval_batch(tf, zeros, grid) - np.maximum(grid - kappa, 0.0))
        lo = np.abs(pinn.trial_eval_batch(tf, grid, zeros))
        hi = np.abs(pinn.trial_eval_batch(tf, grid, ones) - (1.0 - kappa))
        worst = max(worst, float(ic.max()), float(lo.max()), float(hi.max()))
    elapsed = time.time() - started
    ok = worst <= 1e-12 and elapsed < 5.0
    assert report(2, ok, f"max boundary defect {worst:.2e}, {elapsed:.1f} s")


def test_criterion_3_derivative_suite():
    """Analytic derivatives agree with finite differences and closed forms."""
    worst_io = 0.0
    h = 1e-4
    for activation in ("sigmoid", "tanh"):
        arch = neural.NetworkArchitecture((2, 8, 1), activation)
        params = neural.init_params(arch, seed=3)
        rng = np.random.default_rng(7)
        for b in params.biases:
            b += rng.normal(0, 0.5, size=b.shape)
        for _ in range(100):
            t, s = rng.random(), rng.random()
            r = neural.eval(arch, params, t, s)
            f = lambda a, b2: neural.eval(arch, params, a, b2).n
            fd = (
                (f(t + h, s) - f(t - h, s)) / (2 * h),
                (f(t, s + h) - f(t, s - h)) / (2 * h),
                (f(t, s + h) - 2 * f(t, s) + f(t, s - h)) / h**2,
            )
            for got, ref in zip((r.dn_dt, r.dn_ds, r.d2n_ds2), fd):
                worst_io = max(worst_io, abs(got - ref) / max(1.0, abs(got)))

    # trial-function derivatives, kink excluded
    kappa = STRIKE / S_MAX
    tf = random_trial(11, kappa)
    rng = np.random.default_rng(13)
    checked = 0
    worst_trial = 0.0
    while checked < 200:
        t, s = rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)
        if abs(s - kappa) < 5 * h:
            continue
        checked += 1
        dt, ds, dss = pinn.trial_derivatives(tf, t, s)
        g = lambda a, b2: pinn.trial_eval(tf, a, b2)
        fd = (
            (g(t + h, s) - g(t - h, s)) / (2 * h),
            (g(t, s + h) - g(t, s - h)) / (2 * h),
            (g(t, s + h) - 2 * g(t, s) + g(t, s - h)) / h**2,
        )
        for got, ref in zip((dt, ds, dss), fd):
            worst_trial = max(worst_trial, abs(got - ref) / max(1.0, abs(got)))

    worst_single = 0.0
    rng = np.random.default_rng(17)
    for k in range(1000):
        m = int(rng.integers(1, 16))
        arch = neural.NetworkArchitecture((2, m, 1), "sigmoid")
        params = neural.init_params(arch, seed=k)
        for b in params.biases:
            b += rng.normal(0, 1.0, size=b.shape)
        t, s = rng.random(), rng.random()
        a = neural.eval(arch, params, t, s)
        b2 = neural.single_layer_analytic(params, t, s)
        worst_single = max(worst_single, abs(a.n - b2.n), abs(a.dn_dt - b2.dn_dt),
                           abs(a.dn_ds - b2.dn_ds), abs(a.d2n_ds2 - b2.d2n_ds2))

    # loss parameter gradient vs finite differences
    model = paper_model()
    pde = build_pde(model, MEAN_PATH)
    grid = pinn.make_grid(4, 4, 1.0, seed=5)
    tf2 = random_trial(19, model.strike_ratio, layers=(2, 6, 4, 1))
    grads = pinn.loss_gradients(tf2, pde, grid.train_points)

    def lval():
        res = pinn.residual_batch(tf2, pde, grid.train_points[:, 0], grid.train_points[:, 1])
        return 0.5 * float(np.sum(res**2))

    worst_grad = 0.0
    hg = 1e-6
    for layer in range(len(tf2.params.weights)):
        for arr, g in ((tf2.params.weights[layer], grads[layer][0]),
                       (tf2.params.biases[layer], grads[layer][1])):
            flat, gflat = arr.ravel(), g.ravel()
            for idx in range(0, flat.size, max(1, flat.size // 4)):
                orig = flat[idx]
                flat[idx] = orig + hg
                fp = lval()
                flat[idx] = orig - hg
                fm = lval()
                flat[idx] = orig
                fd = (fp - fm) / (2 * hg)
                worst_grad = max(worst_grad, abs(gflat[idx] - fd) / max(1.0, abs(fd)))

    ok = worst_io <= 1e-5 and worst_trial <= 1e-5 and worst_single <= 1e-12 \
        and worst_grad <= 1e-4
    assert report(3, ok, f"io {worst_io:.1e}, trial {worst_trial:.1e}, "
                         f"single-layer {worst_single:.1e}, grad {worst_grad:.1e}")


def test_criterion_4_oracle_chain_bs_reduction():
    """FD within 0.5% of S_max of the closed form; MC brackets it at 3 SE."""
    started = time.time()
    pde = build_pde(reduction_model(), FROZEN, variant="bs")
    sol = fd_solver.solve_crank_nicolson(pde, fd_solver.FdGrid(400, 400))
    s = sol.grid.s_nodes
    mask = (s >= 0.2) & (s <= 0.8)
    worst = 0.0
    for j, tj in enumerate(sol.grid.t_nodes):
        cf = np.array([simulate.closed_form_bs(si, 0.5, 0.05, 0.2, tj) for si in s[mask]])
        worst = max(worst, float(np.max(np.abs(sol.values[j][mask] - cf))))

    cf_atm = simulate.closed_form_bs(0.5, 0.5, 0.05, 0.2, 1.0)
    mc = simulate.feynman_kac_price(pde, 0.5, 1.0, 100_000,
                                    simulate.PathConfig(n_steps=200, horizon=1.0, seed=42))
    z = abs(mc.value - cf_atm) / mc.std_error
    elapsed = time.time() - started
    ok = worst <= 0.005 and z <= 3.0 and elapsed < 60.0
    assert report(4, ok, f"fd max err {worst:.2e} (gate 5e-3), mc z {z:.2f}, {elapsed:.1f} s")


def test_criterion_5_oracle_chain_jump_model():
    """FD agrees with the Feynman-Kac estimator at nine probes within 3 SE."""
    started = time.time()
    model = paper_model()
    pde = build_pde(model, MEAN_PATH)
    sol = fd_solver.solve_crank_nicolson(pde, fd_solver.FdGrid(400, 400))
    cfg = simulate.PathConfig(n_steps=250, horizon=model.maturity, seed=7)
    worst_z = 0.0
    for tt in (0.25, 0.5, 0.75):
        for ss in (0.25, 0.5, 0.75):
            mc = simulate.feynman_kac_price(pde, ss, tt, 20_000, cfg)
            fd = sol.values[int(tt * 400), int(ss * 400)]
            gap = abs(fd - mc.value)
            worst_z = max(worst_z, gap / mc.std_error if mc.std_error > 0 else 0.0)
    elapsed = time.time() - started
    ok = worst_z <= 3.0 and elapsed < 60.0
    assert report(5, ok, f"worst probe z {worst_z:.2f} (gate 3), {elapsed:.1f} s")


def test_criterion_6_pinn_quality_model_one():
    """Model I (sigmoid, plain full-batch descent, lr 1e-3, 10x10, 10k steps).

    The monotone-decrease gate holds. The 2%-of-S_max MAE gate is asserted
    exactly as stated; plain gradient descent stalls on a plateau at ~2.3%
    for every seed, learning rate and split tried, while Adam on the
    identical problem reaches ~0.2% (see the README), so this
    assertion is expected to fail.
    """
    started = time.time()
    model = paper_model()
    pde = build_pde(model, MEAN_PATH, variant="jmd")
    arch = neural.NetworkArchitecture((2, 64, 32, 16, 8, 1), "sigmoid")
    params = neural.init_params(arch, seed=42)
    tf = pinn.TrialFunction(arch=arch, params=params, strike_ratio=model.strike_ratio)
    grid = pinn.make_grid(10, 10, 1.0, seed=42)
    cfg = pinn.TrainConfig(optimizer="sgd", learning_rate=1e-3, iterations=10_000,
                           batch="full", seed=42, display_every=500)
    rep = pinn.train(tf, pde, grid, cfg)
    elapsed = time.time() - started

    mses = [c.mse for c in rep.series("train")]
    monotone = all(b < a for a, b in zip(mses, mses[1:]))

    sol = fd_solver.solve_crank_nicolson(pde, fd_solver.FdGrid(200, 200))
    trained = pinn.TrialFunction(arch=arch, params=rep.final_params,
                                 strike_ratio=model.strike_ratio)
    pts = grid.points
    zeta = pinn.trial_eval_batch(trained, pts[:, 0], pts[:, 1])
    fd_vals = np.array([sol.values[int(round(t * 200)), int(round(s * 200))]
                        for t, s in pts])
    mae = float(np.mean(np.abs(zeta - fd_vals)))

    ok = monotone and mae <= 0.02 and elapsed < 120.0
    report(6, ok, f"mae {mae:.4f} (gate 0.02), monotone={monotone}, {elapsed:.0f} s")
    assert monotone, "checkpoint MSE not strictly decreasing"
    assert elapsed < 120.0
    assert mae <= 0.02, (
        f"grid MAE {mae:.4f} exceeds 2% of S_max: plain full-batch gradient "
        "descent plateaus here for every configuration tried; see README"
    )


def test_criterion_7a_lambda_identity():
    """lambda is exactly jump_count / period_years (definitional identity)."""
    rng = np.random.default_rng(3)
    ok = True
    for period in (0.7, 2.5, 5.0):
        returns = ReturnSeries(values=rng.normal(0, 0.06, size=900), period_years=period)
        est = estimate_jump_diffusion(returns, JumpThresholdConfig(0.07))
        ok = ok and est.lam == est.jump_count / period
        # the product form re-rounds once, so it holds to one ulp
        ok = ok and est.lam * period == pytest.approx(est.jump_count, rel=1e-15)
    assert report("7a", ok, "lambda == jump_count / period_years, exact")


def test_criterion_7b_synthetic_recovery():
    """Threshold recovery at the stated parameters and tolerances.

    Asserted exactly as stated; structurally unattainable with the specified
    procedure: at eps = 0.07 with sigma_d = 0.04/day, diffusion-only days
    trip the threshold at an 8% rate (~27 false jumps/yr) while only ~52% of
    Normal(0, 0.1) jump days exceed it, and the full-series deviation absorbs
    the jump variance. Expected lambda-hat ~ 42 (+40%), sigma-hat ~ 0.048
    (+21%). See the README.
    """
    true_lam, true_sigma = 30.0, 0.04
    k_true = math.exp(0.0 + 0.1**2 / 2.0) - 1.0
    model = paper_model(
        jd=JumpDiffusionEstimate(mu_d=0.0, sigma_d=true_sigma, lam=true_lam,
                                 k=k_true, mu_j=0.0, delta_j=0.1),
        sp=SentimentEstimate(mu_p=0.0, sigma_p=0.0),
        phi0=1.0, strike=0.5, s_max=1.0, rate=0.04, maturity=5.0, day_count=365,
    )
    lams, sigmas = [], []
    for seed in range(10):
        path = simulate.simulate_jump_diffusion(
            model, simulate.PathConfig(n_steps=1825, horizon=5.0, seed=seed,
                                       scheme="exact"), s0=1.0)
        returns = ReturnSeries(values=np.diff(np.log(path.s_values)), period_years=5.0)
        est = estimate_jump_diffusion(returns, JumpThresholdConfig(0.07))
        lams.append(est.lam)
        sigmas.append(est.sigma_d)
    lam_hat, sigma_hat = float(np.mean(lams)), float(np.mean(sigmas))
    lam_err = abs(lam_hat - true_lam) / true_lam
    sig_err = abs(sigma_hat - true_sigma) / true_sigma
    ok = lam_err <= 0.15 and sig_err <= 0.05
    report("7b", ok, f"lambda {lam_hat:.1f} ({lam_err:+.0%} vs +-15%), "
                     f"sigma_d {sigma_hat:.4f} ({sig_err:+.0%} vs +-5%)")
    assert lam_err <= 0.15, (
        f"lambda recovered {lam_hat:.1f} vs 30 (+{lam_err:.0%}): threshold "
        "counting is biased at these parameters; see README"
    )
    assert sig_err <= 0.05


def test_criterion_8_grid_refinement():
    """Doubling the FD resolution reduces the interior error by >= 1.5x."""
    pde = build_pde(reduction_model(rate=0.0), FROZEN, variant="bs")
    errors = []
    for n in (100, 200):
        sol = fd_solver.solve_crank_nicolson(pde, fd_solver.FdGrid(n, n))
        s = sol.grid.s_nodes
        mask = (s >= 0.2) & (s <= 0.8)
        cf = np.array([simulate.closed_form_bs(si, 0.5, 0.0, 0.2, 1.0)
                       for si in s[mask]])
        errors.append(float(np.max(np.abs(sol.values[-1][mask] - cf))))
    factor = errors[0] / errors[1]
    assert report(8, factor >= 1.5, f"error {errors[0]:.2e} -> {errors[1]:.2e}, "
                                    f"factor {factor:.2f} (gate 1.5)")


def test_criterion_9_reduction_equivalence(tmp_path):
    """jmd with mu_d = lambda k matches bs bit for bit through the CLI."""
    lam = 31.8
    mu_j = math.log(1 - 0.002195)
    k = math.exp(mu_j) - 1
    values = {
        "mu_d": repr(lam * k), "sigma_d": repr(0.04132), "lambda": repr(lam),
        "k": repr(k), "mu_j": repr(mu_j), "delta_j": "0.0",
        "mu_p": repr(0.01033), "sigma_p": repr(0.20934), "phi0": "0.01",
        "tau": "0.0", "rate": "0.04", "strike": "30000.0", "s_max": "63577.0",
        "maturity": "5.0", "day_count": "365", "policy": "mean-path",
    }
    params = tmp_path / "p.txt"
    params.write_text("\n".join(f"{a} = {b}" for a, b in values.items()) + "\n")
    surfaces = {}
    for variant in ("bs", "jmd"):
        out = tmp_path / f"{variant}.csv"
        rc = cli.main(["price", "--params", str(params), "--fd", "--grid", "100x100",
                       "--model", variant, "--spot", "10000",
                       "--surface-out", str(out), "--no-figures"])
        assert rc == 0
        rows = list(csv.DictReader(out.open()))
        surfaces[variant] = np.array([float(r["value_normalized"]) for r in rows])
    gap = float(np.max(np.abs(surfaces["bs"] - surfaces["jmd"])))
    assert report(9, gap <= 1e-12, f"max surface gap {gap:.1e} (gate 1e-12)")


def test_criterion_10_delay_sweep_ordering():
    """Strictly decreasing values in tau for all four quoted contracts.

    Asserted exactly as stated. The NVDA C435 calibration has lambda k =
    0.47/yr, so the equation's uncompensated source term dominates the
    payoff leg, values are negative and shrink in magnitude as the
    effective maturity falls, inverting the ordering; no admissible choice
    of phi0, rate or price cap flips it. See the README.
    """
    contracts = [
        ("TSLA C245", 0.0002054, -0.000359, 0.009956, 0.0994, 0.555, 5.50,
         0.625, 245.0, 190.90),
        ("TSLA C250", 0.0002054, -0.000359, 0.009956, 0.0994, 0.555, 5.50,
         0.625, 250.0, 190.90),
        ("NVDA C435", 0.0011744, 0.004902, 0.06638, 0.01156, 0.427, 7.06,
         0.75, 435.0, 269.97),
        ("NFLX C370", -0.000762, -0.000977, -0.112378, 0.06705, 0.433, 2.00,
         0.9167, 370.0, 338.21),
    ]
    failures = []
    for name, mu_p, mu_d, k, sigma_p, sigma_d, lam, tenor, strike, spot in contracts:
        model = MarketModel(
            jd=JumpDiffusionEstimate(mu_d=mu_d, sigma_d=sigma_d, lam=lam, k=k,
                                     mu_j=math.log(1 + k), delta_j=0.0),
            sp=SentimentEstimate(mu_p=mu_p, sigma_p=sigma_p),
            phi0=1.0, tau=0.0, rate=0.05, strike=strike, s_max=2.0 * strike,
            maturity=tenor, day_count=252,
        )
        taus = [pricing.tau_years_from_days(d, 252) for d in (5, 10, 15, 20)]
        rows = pricing.delay_sweep(model, MEAN_PATH, taus, spot_dollars=spot,
                                   fd_grid=(100, 100))
        values = [v for _, v in rows]
        decreasing = all(b < a for a, b in zip(values, values[1:]))
        print(f"  {name}: {['%.4f' % v for v in values]} decreasing={decreasing}")
        if not decreasing:
            failures.append(name)
    report(10, not failures, "strictly decreasing for "
                             f"{4 - len(failures)}/4 contracts"
                             + (f" (failing: {', '.join(failures)})" if failures else ""))
    assert not failures, (
        f"delay ordering inverted for {failures}: the uncompensated jump "
        "source term dominates these calibrations; see README"
    )


def test_criterion_11_manifest_determinism(tmp_path):
    """Re-running a command from its manifest reproduces artifacts byte-exact."""
    mu_j = math.log(1 - 0.002195)
    values = {
        "mu_d": repr(-0.00241), "sigma_d": repr(0.04132), "lambda": repr(31.8),
        "k": repr(math.exp(mu_j) - 1), "mu_j": repr(mu_j), "delta_j": "0.0",
        "mu_p": repr(0.01033), "sigma_p": repr(0.20934), "phi0": "0.01",
        "tau": "0.0", "rate": "0.04", "strike": "30000.0", "s_max": "63577.0",
        "maturity": "5.0", "day_count": "365", "policy": "mean-path",
    }
    params = tmp_path / "p.txt"
    params.write_text("\n".join(f"{a} = {b}" for a, b in values.items()) + "\n")

    identical = True
    sweep = tmp_path / "sweep.csv"
    rc = cli.main(["delay-sweep", "--params", str(params), "--taus", "5,10",
                   "--spot", "10000", "--grid", "60x60", "--out", str(sweep)])
    assert rc == 0
    rc = cli.main(["rerun", str(tmp_path / "sweep.csv.manifest.json"),
                   "--out-dir", str(tmp_path / "replay")])
    assert rc == 0
    for name in ("sweep.csv", "sweep.png"):
        identical &= (tmp_path / "replay" / name).read_bytes() == (tmp_path / name).read_bytes()

    weights = tmp_path / "w.txt"
    rc = cli.main(["train", "--params", str(params), "--iters", "80",
                   "--display-every", "40", "--out-weights", str(weights),
                   "--metrics", str(tmp_path / "m.csv"), "--seed", "4"])
    assert rc == 0
    rc = cli.main(["rerun", str(tmp_path / "w.txt.manifest.json"),
                   "--out-dir", str(tmp_path / "replay2")])
    assert rc == 0
    for name in ("w.txt", "m.csv", "m.png"):
        identical &= (tmp_path / "replay2" / name).read_bytes() == (tmp_path / name).read_bytes()

    assert report(11, identical, "delay-sweep and train artifacts byte-identical on rerun")
