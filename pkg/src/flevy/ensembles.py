"""Monte Carlo ensembles and statistical verification.

``run_ensemble`` simulates M independent replicates of a configured
process (driver, fractional path, mean-reverting transform, or catalog
SDE solution) at a set of observation times and streams them into
moment accumulators; whole paths are never retained.  Every replicate
draws from an RNG seeded deterministically by (master seed, replicate
index), so results are a pure function of the configuration.

The marginal of each linear target is a weighted sum of driver-cell
increments, so the whole pipeline collapses to one weight matrix per
configuration: fractional marginals use the moving-average kernel rows,
mean-reverting marginals compose those with the integration-by-parts
weights (node values, boundary term, trapezoid tail).  This reproduces
the pathwise constructions while batching across replicates.

Statistical comparisons: empirical vs analytic covariance (z-scores with
a discretization-bias allowance), log-log autocovariance slope for
long-range dependence, the long-time decay ladder, and the two-sided
symmetry test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .drivers import LevyDriverSpec, derive_replicate_seed, second_moment, two_sided_increments
from .errors import ConfigError, GridSizeError, NumericalError
from .floup import FloupParams, cov_rs_integrals
from .fractional import FlpParams, flp_covariance, flp_weight_block
from .paths import SamplePath
from .summation import compensated_matmul
from .transforms import ProperTriple, catalog

DEFAULT_BATCH = 256
MAX_ENSEMBLE_CELLS = 1 << 23  # per-replicate driver cells


@dataclass(frozen=True)
class EnsembleConfig:
    """Everything needed to reproduce one Monte Carlo experiment."""

    replicates: int
    driver: LevyDriverSpec
    flp: FlpParams
    master_seed: int
    obs_times: tuple[float, ...]
    floup: FloupParams | None = None
    model_id: str | None = None
    model_params: dict = field(default_factory=dict)
    target: str | None = None  # driver | flp | floup | sde; inferred when None
    cov_pairs: tuple[tuple[float, float], ...] = ()
    lags: tuple[float, ...] = ()
    lag_base: float = 0.0
    ecf_points: tuple[tuple[float, float], ...] = ()
    batch: int = DEFAULT_BATCH

    def __post_init__(self):
        if self.replicates < 2:
            raise ConfigError("need at least 2 replicates")
        if not self.obs_times:
            raise ConfigError("need at least one observation time")
        if self.batch < 1:
            raise ConfigError("batch must be >= 1")
        kind = self.target or ("sde" if self.model_id else "floup" if self.floup else "flp")
        if kind not in ("driver", "flp", "floup", "sde"):
            raise ConfigError(f"unknown target {kind!r}")
        if kind in ("floup", "sde") and self.floup is None:
            raise ConfigError(f"target {kind!r} needs mean-reversion parameters")
        object.__setattr__(self, "target", kind)
        for s in self.lags:
            if s <= 0:
                raise ConfigError("lags must be positive")

    def resolved_model(self) -> ProperTriple | None:
        if self.model_id is None:
            return None
        triple = catalog(self.model_id, self.model_params)
        if self.floup is not None and abs(triple.lam - self.floup.lam) > 1e-9 * triple.lam:
            raise ConfigError(
                f"model rate {triple.lam!r} does not match mean-reversion rate "
                f"{self.floup.lam!r}"
            )
        return triple


@dataclass(frozen=True)
class EnsembleStats:
    """Streaming aggregates of one ensemble; a pure function of its config."""

    config: EnsembleConfig
    obs_times: tuple[float, ...]
    replicates: int
    mean: np.ndarray
    variance: np.ndarray
    se_mean: np.ndarray
    central: dict[int, np.ndarray]  # exact central moments, orders 2..6
    covariances: dict[tuple[float, float], float]
    cov_se: dict[tuple[float, float], float]
    lag_base: float
    lag_covariances: tuple[tuple[float, float, float], ...]  # (lag, cov, se)
    ecf: dict[tuple[float, float], complex]
    ecf_se: dict[tuple[float, float], tuple[float, float]]

    def se_variance(self) -> np.ndarray:
        mu2, mu4 = self.central[2], self.central[4]
        return np.sqrt(np.maximum(mu4 - mu2**2, 0.0) / self.replicates)

    def se_third(self) -> np.ndarray:
        mu2, mu3, mu4, mu6 = (self.central[k] for k in (2, 3, 4, 6))
        var3 = mu6 - mu3**2 - 6.0 * mu4 * mu2 + 9.0 * mu2**3
        return np.sqrt(np.maximum(var3, 0.0) / self.replicates)


# --- weight-matrix construction ------------------------------------------------


def _snap_times(times, dt: float) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    idx = np.round(t / dt)
    if np.any(np.abs(t - idx * dt) > 1e-6 * dt * (1.0 + np.abs(idx))):
        raise ConfigError(f"observation times {times!r} must lie on the lattice dt={dt}")
    return idx.astype(int)


def _marginal_weights(cfg: EnsembleConfig, eval_idx: np.ndarray) -> tuple[np.ndarray, int, int]:
    """Weights W with marginals = W @ cell_increments; returns (W, k_lo, k_hi)."""
    params = cfg.flp
    n, dt = params.n, params.dt
    t_eval = eval_idx * dt
    t_max = float(t_eval.max())

    if cfg.target == "driver":
        k_lo = min(int(eval_idx.min()), 0)
        k_hi = max(int(eval_idx.max()), 0)
        cells = np.arange(k_lo, k_hi)
        W = np.zeros((eval_idx.size, cells.size))
        for r, j in enumerate(eval_idx):
            if j > 0:
                W[r, (0 - k_lo) : (j - k_lo)] = 1.0
            elif j < 0:
                W[r, (j - k_lo) : (0 - k_lo)] = -1.0
        return W, k_lo, k_hi

    k_lo = params.k_min
    k_hi = max(int(math.ceil(t_max * n - 1e-9)), 0)
    if k_hi - k_lo > MAX_ENSEMBLE_CELLS:
        raise GridSizeError(f"ensemble grid of {k_hi - k_lo} cells exceeds the cap")
    if float(t_eval.min()) <= k_lo * dt:
        raise ConfigError("observation times reach below the truncated past window")
    cells = np.arange(k_lo, k_hi)

    if cfg.target == "flp":
        return flp_weight_block(t_eval, cells, params), k_lo, k_hi

    floup = cfg.floup
    lam = floup.lam
    floup.check_cutoff(params.d, t_min=float(t_eval.min()))
    ia = int(math.floor(floup.past_cutoff / dt))
    if ia <= k_lo:
        raise ConfigError(
            "mean-reversion cutoff reaches below the truncated past window; "
            "increase past_window_exponent or shrink the cutoff"
        )
    j_max = int(eval_idx.max())
    quad_idx = np.arange(ia, j_max + 1)
    quad_times = quad_idx * dt

    # integration-by-parts rows over fractional-path node values
    B = np.zeros((eval_idx.size, quad_idx.size))
    for r, j in enumerate(eval_idx):
        m = j - ia  # node count up to t_j
        if m <= 0:
            raise ConfigError("observation times must lie above the past cutoff")
        decay = np.exp(-lam * dt * np.arange(m, -1, -1.0))
        trap = np.full(m + 1, dt)
        trap[0] = trap[-1] = dt / 2.0
        B[r, : m + 1] = -lam * trap * decay
        B[r, m] += 1.0
        B[r, 0] -= math.exp(-lam * dt * m)

    W = np.zeros((eval_idx.size, cells.size))
    chunk = max(1, (1 << 22) // max(quad_idx.size, 1))
    for c0 in range(0, cells.size, chunk):
        block = flp_weight_block(quad_times, cells[c0 : c0 + chunk], params)
        W[:, c0 : c0 + chunk] = B @ block
    return W, k_lo, k_hi


# --- streaming moments ----------------------------------------------------------


class _MomentAccumulator:
    """Shifted power sums, mergeable and associative for fixed shifts."""

    def __init__(self, n_times: int, pair_idx: list[tuple[int, int]], ecf: list[tuple[int, float]]):
        self.count = 0
        self.shift = np.zeros(n_times)
        self.sums = {k: np.zeros(n_times) for k in range(1, 7)}
        self.pair_idx = pair_idx
        self.pair_sums = {
            key: np.zeros(len(pair_idx)) for key in ("xy", "x2y", "xy2", "x2y2")
        }
        self.ecf_spec = ecf
        self.ecf_sums = {key: np.zeros(len(ecf)) for key in ("c", "s", "c2", "s2")}

    def set_shift(self, shift: np.ndarray) -> None:
        if self.count:
            raise ConfigError("shift must be fixed before accumulation")
        self.shift = np.asarray(shift, dtype=float)

    def update(self, x: np.ndarray) -> None:
        """x has shape (n_times, batch)."""
        y = x - self.shift[:, None]
        self.count += x.shape[1]
        p = y.copy()
        for k in range(1, 7):
            self.sums[k] += p.sum(axis=1)
            if k < 6:
                p *= y
        for r, (i, j) in enumerate(self.pair_idx):
            yi, yj = y[i], y[j]
            self.pair_sums["xy"][r] += float(np.sum(yi * yj))
            self.pair_sums["x2y"][r] += float(np.sum(yi * yi * yj))
            self.pair_sums["xy2"][r] += float(np.sum(yi * yj * yj))
            self.pair_sums["x2y2"][r] += float(np.sum((yi * yj) ** 2))
        for r, (i, u) in enumerate(self.ecf_spec):
            cu, su = np.cos(u * x[i]), np.sin(u * x[i])
            self.ecf_sums["c"][r] += float(np.sum(cu))
            self.ecf_sums["s"][r] += float(np.sum(su))
            self.ecf_sums["c2"][r] += float(np.sum(cu * cu))
            self.ecf_sums["s2"][r] += float(np.sum(su * su))

    def merge(self, other: "_MomentAccumulator") -> None:
        if not np.array_equal(self.shift, other.shift):
            raise ConfigError("cannot merge accumulators with different shifts")
        self.count += other.count
        for k in self.sums:
            self.sums[k] += other.sums[k]
        for key in self.pair_sums:
            self.pair_sums[key] += other.pair_sums[key]
        for key in self.ecf_sums:
            self.ecf_sums[key] += other.ecf_sums[key]

    def central_moments(self) -> dict[int, np.ndarray]:
        """Exact central moments 1..6 from the shifted power sums."""
        n = float(self.count)
        m = {k: self.sums[k] / n for k in range(1, 7)}
        mu1 = m[1]
        out = {1: self.shift + mu1}
        # binomial recentering of raw (shifted) moments about mu1
        for k in range(2, 7):
            total = np.zeros_like(mu1)
            for j in range(0, k + 1):
                raw = m[j] if j >= 1 else 1.0
                total += math.comb(k, j) * raw * (-mu1) ** (k - j)
            out[k] = total
        return out


# --- the runner -----------------------------------------------------------------


def run_ensemble(config: EnsembleConfig) -> EnsembleStats:
    """Simulate the configured ensemble and return streaming statistics."""
    params = config.flp
    dt = params.dt
    obs_idx = _snap_times(config.obs_times, dt)
    obs_times = tuple(float(i * dt) for i in obs_idx)

    pair_times: list[tuple[float, float]] = list(config.cov_pairs)
    for s in config.lags:
        pair_times.append((config.lag_base, config.lag_base + s))
    eval_times = list(obs_times)
    for a, b in pair_times:
        eval_times.extend((a, b))
    for t, _u in config.ecf_points:
        eval_times.append(t)
    eval_idx = np.unique(_snap_times(eval_times, dt))
    where = {int(i): r for r, i in enumerate(eval_idx)}

    def row_of(t: float) -> int:
        return where[int(_snap_times([t], dt)[0])]

    W, k_lo, k_hi = _marginal_weights(config, eval_idx)
    triple = config.resolved_model()

    pair_idx = [(row_of(a), row_of(b)) for a, b in pair_times]
    ecf_spec = [(row_of(t), float(u)) for t, u in config.ecf_points]
    acc = _MomentAccumulator(eval_idx.size, pair_idx, ecf_spec)

    n_neg, n_pos = -k_lo, k_hi
    batch = int(config.batch)
    first = True
    for r0 in range(0, config.replicates, batch):
        rows = range(r0, min(r0 + batch, config.replicates))
        inc = np.empty((k_hi - k_lo, len(rows)))
        for c, r in enumerate(rows):
            spec = config.driver.with_seed(derive_replicate_seed(config.master_seed, r))
            inc[:, c] = two_sided_increments(spec, n_neg, n_pos, dt)
        marg = compensated_matmul(W, inc)
        if triple is not None:
            marg = np.asarray(triple.f(marg), dtype=float)
        if first:
            acc.set_shift(marg.mean(axis=1))
            first = False
        acc.update(marg)

    return _finalize(config, obs_times, eval_idx, acc, pair_times, row_of)


def _finalize(config, obs_times, eval_idx, acc: _MomentAccumulator, pair_times, row_of):
    n = acc.count
    central = acc.central_moments()
    mean_all = central[1]
    mu = {k: central[k] for k in range(2, 7)}
    var_all = mu[2] * n / (n - 1)

    obs_rows = np.array([row_of(t) for t in obs_times])
    covariances: dict[tuple[float, float], float] = {}
    cov_se: dict[tuple[float, float], float] = {}
    for r, (a, b) in enumerate(pair_times):
        i, j = acc.pair_idx[r]
        y1 = acc.sums[1][i] / n
        y2 = acc.sums[1][j] / n
        exy = acc.pair_sums["xy"][r] / n
        cov = (exy - y1 * y2) * n / (n - 1)
        ex2y = acc.pair_sums["x2y"][r] / n
        exy2 = acc.pair_sums["xy2"][r] / n
        ex2 = acc.sums[2][i] / n
        ey2 = acc.sums[2][j] / n
        ex2y2 = acc.pair_sums["x2y2"][r] / n
        q = (
            ex2y2
            - 2.0 * y2 * ex2y
            - 2.0 * y1 * exy2
            + y2**2 * ex2
            + y1**2 * ey2
            + 4.0 * y1 * y2 * exy
            - 3.0 * y1**2 * y2**2
        )
        key = (float(a), float(b))
        covariances[key] = float(cov)
        cov_se[key] = float(np.sqrt(max(q - (exy - y1 * y2) ** 2, 0.0) / n))

    lag_rows = []
    for s in config.lags:
        key = (float(config.lag_base), float(config.lag_base + s))
        lag_rows.append((float(s), covariances[key], cov_se[key]))

    ecf: dict[tuple[float, float], complex] = {}
    ecf_se: dict[tuple[float, float], tuple[float, float]] = {}
    for r, (t, u) in enumerate(config.ecf_points):
        re = acc.ecf_sums["c"][r] / n
        im = acc.ecf_sums["s"][r] / n
        se_re = math.sqrt(max(acc.ecf_sums["c2"][r] / n - re**2, 0.0) / n)
        se_im = math.sqrt(max(acc.ecf_sums["s2"][r] / n - im**2, 0.0) / n)
        ecf[(float(t), float(u))] = complex(re, im)
        ecf_se[(float(t), float(u))] = (se_re, se_im)

    return EnsembleStats(
        config=config,
        obs_times=obs_times,
        replicates=n,
        mean=mean_all[obs_rows],
        variance=var_all[obs_rows],
        se_mean=np.sqrt(var_all[obs_rows] / n),
        central={k: mu[k][obs_rows] for k in range(2, 7)},
        covariances=covariances,
        cov_se=cov_se,
        lag_base=float(config.lag_base),
        lag_covariances=tuple(lag_rows),
        ecf=ecf,
        ecf_se=ecf_se,
    )


# --- comparisons ----------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    expected: float
    observed: float
    se: float
    allowance: float
    z: float
    within: bool


@dataclass(frozen=True)
class ComparisonReport:
    source: str
    rows: tuple[ComparisonRow, ...]

    @property
    def all_within(self) -> bool:
        return all(r.within for r in self.rows)


def compare_covariance(
    stats: EnsembleStats,
    analytic: str,
    bias_allowance=0.0,
    quad_tol: float = 1e-6,
) -> ComparisonReport:
    """Per-pair z-scores of empirical vs analytic covariance.

    ``analytic`` chooses the reference: "flp" for the closed-form
    fractional covariance, "floup" for the singular-kernel double
    quadrature with exponential weights.  ``bias_allowance`` (scalar or
    mapping pair -> value) widens the 3-standard-error band by the
    empirically estimated discretization bias.
    """
    if analytic not in ("flp", "floup"):
        raise ConfigError(f"analytic source must be 'flp' or 'floup', got {analytic!r}")
    if not stats.covariances:
        raise ConfigError("stats contain no covariance pairs")
    cfg = stats.config
    d = cfg.flp.d
    m2 = second_moment(cfg.driver)
    rows = []
    for (a, b), emp in stats.covariances.items():
        if analytic == "flp":
            ana = flp_covariance(a, b, d, m2)
        else:
            lam = cfg.floup.lam
            span = -cfg.floup.past_cutoff
            fa = _exp_kernel(a, lam)
            fb = _exp_kernel(b, lam)
            ana = cov_rs_integrals(
                fa, fb, d, m2, quad_tol=quad_tol, domain=(min(a, b) - span, max(a, b))
            )
        se = stats.cov_se[(a, b)]
        allow = (
            float(bias_allowance.get((a, b), 0.0))
            if hasattr(bias_allowance, "get")
            else float(bias_allowance)
        )
        z = (emp - ana) / se if se > 0 else math.inf
        rows.append(
            ComparisonRow(
                name=f"cov({a:g},{b:g})",
                expected=float(ana),
                observed=float(emp),
                se=float(se),
                allowance=allow,
                z=float(z),
                within=abs(emp - ana) <= 3.0 * se + allow,
            )
        )
    return ComparisonReport(source=analytic, rows=tuple(rows))


def _exp_kernel(t0: float, lam: float):
    def f(t: float) -> float:
        return math.exp(-lam * (t0 - t)) if t <= t0 else 0.0

    return f


def lrd_slope(stats: EnsembleStats, lag_window: tuple[float, float]) -> tuple[float, float]:
    """OLS slope of log |autocovariance| against log lag, with its stderr.

    Long memory shows up as slope 2d - 1.  Non-positive estimates inside
    the window trigger one retry with the window widened toward smaller
    lags; if that still fails a diagnostic error is raised.
    """
    if not stats.lag_covariances:
        raise ConfigError("stats contain no lag covariances")
    s_min, s_max = float(lag_window[0]), float(lag_window[1])

    def attempt(lo, hi):
        sel = [(s, c) for s, c, _ in stats.lag_covariances if lo <= s <= hi]
        if len(sel) < 5:
            raise ConfigError(f"need >= 5 lags inside [{lo}, {hi}], found {len(sel)}")
        if any(c <= 0.0 for _, c in sel):
            return None
        x = np.log([s for s, _ in sel])
        y = np.log([c for _, c in sel])
        return _ols(x, y)

    out = attempt(s_min, s_max)
    if out is None:
        out = attempt(s_min / 2.0, s_max)
    if out is None:
        bad = [(s, c) for s, c, _ in stats.lag_covariances if c <= 0.0]
        raise NumericalError(
            f"autocovariance hit the noise floor (non-positive at lags {bad}); "
            "increase replicates or shrink the window"
        )
    return out


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    xc = x - x.mean()
    slope = float(np.sum(xc * y) / np.sum(xc**2))
    intercept = float(y.mean() - slope * x.mean())
    resid = y - intercept - slope * x
    dof = max(x.size - 2, 1)
    se = float(np.sqrt(np.sum(resid**2) / dof / np.sum(xc**2)))
    return slope, se


def long_time_ratio(
    path: SamplePath,
    d: float,
    alpha: float,
    ladder: tuple[float, ...] | None = None,
) -> list[tuple[float, float]]:
    """max |path(t)| / |t|^alpha over t in [-T, -T/2], per ladder rung T.

    Requires alpha > d + 1/2 (the decay hypothesis); for such alpha the
    sequence should trend non-increasing as T grows.
    """
    if not alpha > d + 0.5:
        raise ConfigError(f"alpha must exceed d + 1/2 = {d + 0.5}, got {alpha}")
    t = path.times()
    if ladder is None:
        t_deep = -path.t0
        rungs = []
        T = 16.0 * path.dt
        while T <= t_deep:
            rungs.append(T)
            T *= 2.0
        ladder = tuple(rungs)
    out = []
    for T in ladder:
        mask = (t >= -T) & (t <= -T / 2.0)
        if not np.any(mask):
            raise ConfigError(f"path does not cover [-{T}, -{T / 2}]")
        ratios = np.abs(path.values[mask]) / np.abs(t[mask]) ** alpha
        out.append((float(T), float(ratios.max())))
    return sorted(out)


@dataclass(frozen=True)
class SymmetryReport:
    rows: tuple[ComparisonRow, ...]

    @property
    def all_within(self) -> bool:
        return all(r.within for r in self.rows)


def symmetry_test(stats: EnsembleStats, stats_mirror: EnsembleStats) -> SymmetryReport:
    """Distributional symmetry: the time-reversed ensemble should match the
    negated one in mean, variance, and third central moment (3 se bands).

    ``stats_mirror`` must observe the negated times of ``stats``, from an
    independent seed.
    """
    ta = np.asarray(stats.obs_times)
    tb = np.asarray(stats_mirror.obs_times)
    if not np.allclose(ta, -tb, atol=1e-9):
        raise ConfigError("mirror ensemble must observe the negated times")
    rows = []
    se3a, se3b = stats.se_third(), stats_mirror.se_third()
    seva = stats.se_variance()
    sevb = stats_mirror.se_variance()
    for i, t in enumerate(ta):
        for name, a, b, se in (
            (f"mean(t={t:g})", stats.mean[i], -stats_mirror.mean[i],
             math.hypot(stats.se_mean[i], stats_mirror.se_mean[i])),
            (f"var(t={t:g})", stats.variance[i], stats_mirror.variance[i],
             math.hypot(seva[i], sevb[i])),
            (f"skew3(t={t:g})", stats.central[3][i], -stats_mirror.central[3][i],
             math.hypot(se3a[i], se3b[i])),
        ):
            z = (a - b) / se if se > 0 else math.inf
            rows.append(
                ComparisonRow(
                    name=name, expected=float(b), observed=float(a), se=float(se),
                    allowance=0.0, z=float(z), within=abs(z) <= 3.0,
                )
            )
    return SymmetryReport(rows=tuple(rows))
