"""Command-line interface: reproducible runs, CSV persistence, verification.

Subcommands
-----------
simulate {driver,flp,floup,sde} --config C --out F [--seed N]
    Simulate one path and write it as CSV (header ``t,value``, 17
    significant digits, so a write/read round trip is exact).
verify {covariance,lrd,langevin,sst_residual,appendix_calculus,gamma_identities}
       --config C [--seed N]
    Run a verification suite, print one line per check (name, expected,
    observed, tolerance, PASS/FAIL).
plotdata --out F INPUT...
    Merge path CSVs into one long-format file ``series,t,value`` for
    external plotting; no resampling.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical error.  All randomness flows from ``ensemble.seed`` (or the
``--seed`` override); there is no wall-clock seeding.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .drivers import LevyDriverSpec, sample_two_sided_levy, second_moment
from .ensembles import EnsembleConfig, lrd_slope, run_ensemble
from .errors import ConfigError, FlevyError, NumericalError
from .floup import (
    FloupParams,
    choose_past_cutoff,
    floup_via_ibp,
    gripenberg_norros,
    gripenberg_norros_quadrature,
    ou_operator,
)
from .fractional import FlpParams, flp_covariance, flp_weight_block, simulate_flp
from .paths import GridFunction, SamplePath
from .refinement import coupled_flp_family
from .summation import compensated_matmul
from .transforms import catalog, residual_check, solve_sde
from .young import (
    chain_rule_residual,
    cumulative_rs_integral,
    p_variation,
    p_variation_brute_force,
    rs_integral,
)

VERIFY_SUITES = (
    "covariance",
    "lrd",
    "langevin",
    "sst_residual",
    "appendix_calculus",
    "gamma_identities",
)


# --- CSV ------------------------------------------------------------------


def write_path_csv(path: SamplePath, out: str | Path) -> None:
    lines = ["t,value"]
    t = path.times()
    for i in range(len(path)):
        lines.append(f"{t[i]:.17g},{path.values[i]:.17g}")
    Path(out).write_text("\n".join(lines) + "\n")


def read_path_csv(source: str | Path) -> tuple[np.ndarray, np.ndarray]:
    try:
        text = Path(source).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {source!r}: {exc}") from exc
    rows = text.strip().splitlines()
    if not rows or rows[0].strip() != "t,value":
        raise ConfigError(f"{source}: expected header 't,value'")
    ts, vs = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            a, b = row.split(",")
            ts.append(float(a))
            vs.append(float(b))
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: malformed row {row!r}") from exc
    return np.array(ts), np.array(vs)


# --- simulate ---------------------------------------------------------------


def _output_span(cfg: dict) -> tuple[float, float]:
    if "output.t_max" not in cfg:
        raise ConfigError("output.t_max is required")
    lo = cfg.get("output.t_min", 0.0)
    hi = cfg["output.t_max"]
    if not lo < hi:
        raise ConfigError(f"need output.t_min < output.t_max, got [{lo}, {hi}]")
    return float(lo), float(hi)


def _simulate_path(kind: str, cfg: dict, seed: int | None) -> SamplePath:
    spec = cfgmod.build_driver(cfg, seed_override=seed)
    lo, hi = _output_span(cfg)

    if kind == "driver":
        dt = cfg.get("output.dt")
        if dt is None:
            dt = 1.0 / cfgmod.build_flp(cfg).n if "flp.n" in cfg else None
        if dt is None:
            raise ConfigError("driver simulation needs output.dt or flp.n")
        if not lo < 0 < hi:
            raise ConfigError("driver output span must straddle 0")
        return sample_two_sided_levy(spec, lo, hi, dt)

    params = cfgmod.build_flp(cfg)
    dt = params.dt
    drv_hi = max(hi, dt)
    if kind == "flp":
        driver = sample_two_sided_levy(spec, -params.window_time, drv_hi, dt)
        return simulate_flp(driver, params, (lo, hi))

    if kind == "floup":
        floup_p = cfgmod.build_floup(cfg, params.d, t_min=lo)
    else:  # sde: the catalog model fixes the friction coefficient
        triple = catalog(cfg.get("model.id", ""), cfgmod.model_params_from(cfg))
        if "floup.lambda" in cfg and abs(cfg["floup.lambda"] - triple.lam) > 1e-9 * triple.lam:
            raise ConfigError(
                f"floup.lambda = {cfg['floup.lambda']} does not match the model "
                f"friction coefficient {triple.lam}"
            )
        cutoff = cfg.get("floup.cutoff")
        if cutoff is None:
            cutoff = choose_past_cutoff(
                triple.lam, params.d, tol=cfg.get("floup.cutoff_tol", 1e-8), t_min=min(lo, 0.0)
            )
        floup_p = FloupParams(lam=triple.lam, past_cutoff=cutoff)
    floup_p.check_cutoff(params.d, t_min=lo)
    a_node = math.floor(floup_p.past_cutoff / dt) * dt
    if a_node <= -params.window_time:
        raise ConfigError(
            "past cutoff reaches below the fractional window; raise flp.window_exponent"
        )
    driver = sample_two_sided_levy(spec, -params.window_time, drv_hi, dt)
    flp = simulate_flp(driver, params, (a_node, hi))
    floup_path = floup_via_ibp(flp, FloupParams(floup_p.lam, a_node, floup_p.cutoff_tol))
    if kind == "floup":
        return floup_path.restrict(lo, hi)

    tau = cfg.get("model.tau", 0.0)
    if cfg.get("model.z") is not None:
        z = cfg["model.z"]
    else:
        z = float(np.asarray(triple.f(floup_path.value_at(tau))))  # stationary start
    solution = solve_sde(triple, floup_path, triple.lam, tau, z)
    return solution.restrict(lo, hi)


def cmd_simulate(args) -> int:
    cfg = cfgmod.parse_config(args.config)
    path = _simulate_path(args.kind, cfg, args.seed)
    write_path_csv(path, args.out)
    return 0


# --- verify -----------------------------------------------------------------


class CheckRow:
    def __init__(self, name, expected, observed, tolerance, passed):
        self.name, self.expected, self.observed = name, expected, observed
        self.tolerance, self.passed = tolerance, passed


def _print_rows(rows: list[CheckRow]) -> bool:
    header = f"{'check':<44} {'expected':>14} {'observed':>14} {'tolerance':>12}  status"
    print(header)
    print("-" * len(header))
    ok = True
    for r in rows:
        status = "PASS" if r.passed else "FAIL"
        ok &= r.passed
        print(
            f"{r.name:<44} {r.expected:>14.6g} {r.observed:>14.6g} "
            f"{r.tolerance:>12.4g}  {status}"
        )
    print(f"{'ALL CHECKS PASS' if ok else 'FAILURES PRESENT'}")
    return ok


def _seed_of(cfg: dict, args) -> int:
    if args.seed is not None:
        return args.seed
    return cfg.get("ensemble.seed", 20260809)


def _verify_gamma_identities(cfg, seed) -> list[CheckRow]:
    rng = np.random.Generator(np.random.PCG64(seed))
    rows = []
    for i in range(20):
        d = float(rng.uniform(0.05, 0.45))
        t = float(rng.uniform(-2.0, 3.0))
        s = t + float(rng.choice([-1.0, 1.0])) * float(rng.uniform(0.05, 4.0))
        closed = gripenberg_norros(t, s, d)
        quad = gripenberg_norros_quadrature(t, s, d, tol=1e-10)
        rel = abs(quad - closed) / abs(closed)
        rows.append(
            CheckRow(f"convolution identity #{i} (d={d:.3f})", closed, quad, 1e-6, rel <= 1e-6)
        )
    return rows


def _verify_appendix_calculus(cfg, seed) -> list[CheckRow]:
    rng = np.random.Generator(np.random.PCG64(seed))
    rows = []
    for i in range(3):
        m = 1000
        f = GridFunction(0.0, 1e-3, rng.uniform(-1, 1, m))
        h = GridFunction(0.0, 1e-3, rng.uniform(-1, 1, m))
        g = GridFunction(0.0, 1e-3, rng.uniform(-1, 1, m))
        phi = cumulative_rs_integral(h, g)
        lhs = rs_integral(f, phi)
        fh = GridFunction(0.0, 1e-3, f.values * h.values)
        rhs = rs_integral(fh, g)
        rows.append(CheckRow(f"density formula #{i}", rhs, lhs, 1e-12, abs(lhs - rhs) <= 1e-12))

    worst = 0.0
    for _ in range(200):
        m = int(rng.integers(3, 13))
        path = GridFunction(0.0, 1.0, rng.uniform(-1, 1, m))
        p = float(rng.uniform(1.0, 3.0))
        worst = max(worst, abs(p_variation(path, p) - p_variation_brute_force(path, p)))
    rows.append(CheckRow("p-variation DP vs brute force (200 paths)", 0.0, worst, 1e-12, worst <= 1e-12))

    grid = GridFunction(0.0, 1e-3, np.arange(1001) * 1e-3)
    res = chain_rule_residual(lambda x: x * x, lambda x: 2.0 * x, grid)
    rows.append(CheckRow("chain rule F=x^2 on g(s)=s", 1e-3, res, 1e-12, abs(res - 1e-3) <= 1e-12))

    spec = LevyDriverSpec(theta=cfg.get("driver.theta", 1.0), seed=seed)
    family = coupled_flp_family(spec, d=cfg.get("flp.d", 0.25), window=4, t_span=(0.0, 2.0), n_values=(50, 100, 200))
    residuals = [
        chain_rule_residual(lambda x: x * x, lambda x: 2.0 * x, family[n]) for n in (50, 100, 200)
    ]
    decays = all(b < a for a, b in zip(residuals, residuals[1:]))
    rows.append(
        CheckRow("chain rule F=x^2 on fractional path decays", 0.0, residuals[-1], math.inf, decays)
    )
    return rows


def _langevin_residual(floup_path: SamplePath, flp: SamplePath, lam: float) -> float:
    """max_t of the integral-form Langevin residual from the common start."""
    l = floup_path.values
    dt = floup_path.dt
    i0 = flp.index_at(floup_path.t0)
    dL = flp.values[i0 : i0 + len(floup_path)] - flp.values[i0]
    trap = np.concatenate(([0.0], np.cumsum(dt * (l[:-1] + l[1:]) / 2.0)))
    resid = l - l[0] + lam * trap - dL
    return float(np.max(np.abs(resid)))


def _verify_langevin(cfg, seed) -> list[CheckRow]:
    d = cfg.get("flp.d", 0.15)
    lam = cfg.get("floup.lambda", 1.0)
    theta = cfg.get("driver.theta", 5.0)
    spec = LevyDriverSpec(theta=theta, seed=seed)
    ns = (100, 200, 400, 800)
    family = coupled_flp_family(spec, d=d, window=30, t_span=(-25.0, 8.0), n_values=ns)
    resids = []
    for n in ns:
        fl = floup_via_ibp(family[n], FloupParams(lam=lam, past_cutoff=-25.0))
        anchored = ou_operator(fl.restrict(0.0, 8.0), lam, 0.0, 0.5)
        resids.append(_langevin_residual(anchored, family[n], lam))
    rows = []
    for i in range(len(ns) - 1):
        ratio = resids[i] / resids[i + 1]
        rows.append(
            CheckRow(
                f"langevin residual ratio n={ns[i]}->n={ns[i + 1]}",
                2.0, ratio, 0.4, 1.6 <= ratio <= 2.4,
            )
        )
    return rows


def _coupled_bias_estimate(spec_builder, d, n, t_pairs, replicates, master_seed):
    """|stat_n - stat_2n| / (1 - 2^(2d-1)) from one coupled 2n ensemble.

    Refinement-extrapolated estimate of the scheme bias of the n-grid
    statistics; the dominant error order of the kernel scheme is
    n^(2d-1), so the raw n-vs-2n gap understates the bias by the
    geometric factor.
    """
    from .drivers import derive_replicate_seed, two_sided_increments

    params_2n = FlpParams(d=d, n=2 * n)
    params_n = FlpParams(d=d, n=n)
    times = sorted({t for pair in t_pairs for t in pair})
    k_lo1, k_hi1 = params_n.k_min, max(int(math.ceil(max(times) * n)), 0)
    cells1 = np.arange(k_lo1, k_hi1)
    W1 = flp_weight_block(np.asarray(times), cells1, params_n)
    k_lo2, k_hi2 = params_2n.k_min, 2 * k_hi1
    cells2 = np.arange(k_lo2, k_hi2)
    W2 = flp_weight_block(np.asarray(times), cells2, params_2n)

    idx = {t: i for i, t in enumerate(times)}
    sums = np.zeros((2, len(t_pairs)))
    batch = 256
    done = 0
    while done < replicates:
        b = min(batch, replicates - done)
        inc2 = np.empty((cells2.size, b))
        for c in range(b):
            spec = spec_builder(derive_replicate_seed(master_seed, done + c))
            inc2[:, c] = two_sided_increments(spec, -k_lo2, k_hi2, params_2n.dt)
        # exact coupling: adjacent fine cells aggregate to the coarse cells,
        # restricted to the coarse window
        pair_sum = inc2[0::2] + inc2[1::2]
        offset = k_lo1 - k_lo2 // 2
        inc1 = pair_sum[offset : offset + cells1.size, :]
        m2v = compensated_matmul(W2, inc2)
        m1v = compensated_matmul(W1, inc1)
        for r, (a, bb) in enumerate(t_pairs):
            sums[0, r] += float(np.sum(m1v[idx[a]] * m1v[idx[bb]]))
            sums[1, r] += float(np.sum(m2v[idx[a]] * m2v[idx[bb]]))
        done += b
    est = np.abs(sums[0] - sums[1]) / replicates
    return est / (1.0 - 2.0 ** (2.0 * d - 1.0))


def _verify_covariance(cfg, seed) -> list[CheckRow]:
    d = cfg.get("flp.d", 0.25)
    n = cfg.get("flp.n", 100)
    reps = cfg.get("ensemble.replicates", 2000)
    analytic_d = cfg.get("verify.analytic_d", d)
    spec = LevyDriverSpec(theta=cfg.get("driver.theta", 1.0), seed=seed)
    pairs = ((1.0, 1.0), (1.0, 0.5))
    ens = EnsembleConfig(
        replicates=reps,
        driver=spec,
        flp=FlpParams(d=d, n=n),
        master_seed=seed,
        obs_times=(0.5, 1.0),
        cov_pairs=pairs,
        target="flp",
    )
    stats = run_ensemble(ens)
    bias = _coupled_bias_estimate(
        lambda s: spec.with_seed(s), d, n, pairs,
        cfg.get("verify.bias_replicates", reps), seed + 1,
    )
    m2 = second_moment(spec)
    rows = []
    for r, (a, b) in enumerate(pairs):
        ana = flp_covariance(a, b, analytic_d, m2)
        emp = stats.covariances[(a, b)]
        se = stats.cov_se[(a, b)]
        tol = 3.0 * se + bias[r]
        rows.append(
            CheckRow(f"fractional cov({a:g},{b:g}) d={analytic_d:g}", ana, emp, tol, abs(emp - ana) <= tol)
        )
    return rows


def _verify_lrd(cfg, seed) -> list[CheckRow]:
    d = cfg.get("flp.d", 0.25)
    lam = cfg.get("floup.lambda", 1.0)
    n = cfg.get("flp.n", 50)
    reps = cfg.get("ensemble.replicates", 4000)
    spec = LevyDriverSpec(theta=cfg.get("driver.theta", 1.0), seed=seed)
    lags = tuple(round(v * n) / n for v in np.geomspace(5.0 / lam, 50.0 / lam, 10))
    window = max(8.0 * 50.0 / lam, 64.0)
    ens = EnsembleConfig(
        replicates=reps,
        driver=spec,
        flp=FlpParams.for_time_window(d, n, window),
        master_seed=seed,
        obs_times=(0.0,),
        floup=FloupParams.auto(lam, d),
        lags=lags,
        lag_base=0.0,
        target="floup",
    )
    stats = run_ensemble(ens)
    slope, se = lrd_slope(stats, (5.0 / lam, 50.0 / lam))
    expected = 2.0 * d - 1.0
    rows = [
        CheckRow(
            f"autocovariance log-log slope (d={d:g})", expected, slope, 0.15,
            abs(slope - expected) <= 0.15,
        )
    ]
    return rows


def _verify_sst_residual(cfg, seed) -> list[CheckRow]:
    models = [
        ("power", {"gamma": 0.0, "alpha": 0.4, "beta": -1.0, "sigma0": 0.8}),
        ("power", {"gamma": 0.5, "alpha": 0.0, "beta": -2.0, "sigma0": 1.0}),
        ("power", {"gamma": 1.0, "alpha": 0.2, "beta": -1.0, "sigma0": 0.6}),
        ("affine_drift", {"alpha": 0.3, "beta": -2.0, "delta": 0.5, "sigma1": 0.8, "sigma2": 1.2}),
        ("trig", {"sigma1": 2.0, "sigma2": 0.5}),
        ("cir", {"gamma": 2.0, "sigma": 1.0}),
        ("log", {"lam": 1.0, "sigma": 0.5}),
    ]
    theta = cfg.get("driver.theta", 1.0)
    d = cfg.get("flp.d", 0.25)
    spec = LevyDriverSpec(theta=theta, seed=seed)
    ns = (50, 100, 200)
    family = coupled_flp_family(spec, d=d, window=30, t_span=(-22.0, 5.0), n_values=ns)
    rows = []
    for mid, params in models:
        triple = catalog(mid, params)
        resids = []
        contained = True
        for n in ns:
            fl = floup_via_ibp(family[n], FloupParams(lam=triple.lam, past_cutoff=-22.0))
            fl = fl.restrict(0.0, 5.0)
            z = float(np.asarray(triple.f(fl.values[0])))
            X = solve_sde(triple, fl, triple.lam, 0.0, z)
            flp_piece = family[n].restrict(0.0, 5.0)
            report = residual_check(X, triple, flp_piece)
            contained &= report.contract == "S1_S2_pass"
            resids.append(report.max_residual)
        decays = all(b < a for a, b in zip(resids, resids[1:]))
        label = f"{mid}({', '.join(f'{k}={v:g}' for k, v in params.items())})"
        rows.append(CheckRow(f"residual decay {label}"[:44], 0.0, resids[-1], math.inf, decays))
        rows.append(CheckRow(f"containment {label}"[:44], 1.0, float(contained), 0.0, contained))
    return rows


_VERIFY_IMPL = {
    "gamma_identities": _verify_gamma_identities,
    "appendix_calculus": _verify_appendix_calculus,
    "langevin": _verify_langevin,
    "covariance": _verify_covariance,
    "lrd": _verify_lrd,
    "sst_residual": _verify_sst_residual,
}


def cmd_verify(args) -> int:
    cfg = cfgmod.parse_config(args.config) if args.config else {}
    seed = _seed_of(cfg, args)
    rows = _VERIFY_IMPL[args.suite](cfg, seed)
    return 0 if _print_rows(rows) else 1


# --- plotdata ----------------------------------------------------------------


def cmd_plotdata(args) -> int:
    lines = ["series,t,value"]
    for source in args.inputs:
        ts, vs = read_path_csv(source)
        series = Path(source).stem
        for t, v in zip(ts, vs):
            lines.append(f"{series},{t:.17g},{v:.17g}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    return 0


# --- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flevy",
        description="Simulation and verification toolkit for fractional jump processes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate one path and write CSV")
    sim.add_argument("kind", choices=("driver", "flp", "floup", "sde"))
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", required=True)
    sim.add_argument("--seed", type=int, default=None, help="override ensemble.seed")
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="run a verification suite")
    ver.add_argument("suite", choices=VERIFY_SUITES)
    ver.add_argument("--config", default=None)
    ver.add_argument("--seed", type=int, default=None)
    ver.set_defaults(func=cmd_verify)

    plot = sub.add_parser("plotdata", help="merge path CSVs into long format")
    plot.add_argument("inputs", nargs="+")
    plot.add_argument("--out", required=True)
    plot.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except FlevyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
