"""State-space transforms: solvable coefficient triples and SDE solutions.

A triple (I, mu, sigma) of state space, drift and volatility is *proper*
when the ratio psi = mu/sigma is strictly decreasing on I, blows up to
+inf / -inf at the endpoints, and sigma * psi' is a negative constant
-lam (the friction coefficient).  It is *strongly proper* when, in
addition, the inverse psi^{-1} is differentiable with a locally
Lipschitz derivative.  The state space transform is the increasing map

    f(x) = psi^{-1}(-lam x),   f: R -> I,   f' = sigma o f,

which turns any re-anchored Langevin solution into a pathwise solution
of dX = mu(X) dt + sigma(X) dL restricted to I.  The solution contract is
checked a posteriori by the grid-level residual of the integral equation
X_t - X_0 = int mu(X) du + int sigma(X) dL.

Sign convention: sigma >= 0 and sigma * psi' = -lam throughout.  The
catalog ships the closed-form families (power drift/volatility, affine
drift with branch-wise power volatility, a bounded trigonometric state
space, a square-root mean-reverting model, and a logarithmic positive
model); numeric and closed-form transforms are cross-checked at build
time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, NumericalError
from .floup import ou_operator
from .paths import SamplePath, require_same_grid

_GAMMA = math.gamma

ArrayFunc = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SdeCoefficients:
    """Bare drift/volatility pair on an interval, for residual checks only."""

    interval: tuple[float, float]
    mu: ArrayFunc
    sigma: ArrayFunc
    closed: bool = False  # True when the interval endpoints are admissible states
    name: str = ""


@dataclass(frozen=True)
class ProperTriple:
    """A (strongly) proper coefficient triple with its transform data."""

    interval: tuple[float, float]
    mu: ArrayFunc
    sigma: ArrayFunc
    psi: ArrayFunc
    lam: float
    f: ArrayFunc
    f_inv: ArrayFunc
    strongly_proper: bool
    name: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        lo, hi = self.interval
        if not lo < hi:
            raise ConfigError(f"state space ({lo}, {hi}) is empty")
        if not (np.isfinite(self.lam) and self.lam > 0.0):
            raise ConfigError(f"friction coefficient must be > 0, got {self.lam!r}")

    def contains(self, x, strict: bool = True) -> np.ndarray:
        lo, hi = self.interval
        x = np.asarray(x, dtype=float)
        if strict:
            return (x > lo) & (x < hi)
        return (x >= lo) & (x <= hi)


@dataclass(frozen=True)
class PropertyCheck:
    passed: bool
    worst_probe: float
    detail: str


@dataclass(frozen=True)
class TripleValidation:
    checks: dict[str, PropertyCheck]
    lambda_recovered: float
    passed: bool

    def failures(self) -> list[str]:
        return [k for k, c in self.checks.items() if not c.passed]


@dataclass(frozen=True)
class SolutionReport:
    """Outcome of the integral-equation residual check."""

    max_residual: float
    residual_profile: SamplePath
    mesh: float
    contract: str  # "S1_S2_pass" | "fail"
    fail_location: float | None = None


# --- probe machinery ---------------------------------------------------------


def probe_points(interval: tuple[float, float], count: int, scale: float = 1.0) -> np.ndarray:
    """Probes concentrated near finite endpoints (tanh warp), reaching far
    toward infinite ones."""
    if count < 16:
        raise ConfigError("probe_count must be at least 16")
    lo, hi = interval
    u = (np.arange(count) + 0.5) / count
    if np.isfinite(lo) and np.isfinite(hi):
        kappa = 6.0
        return lo + (hi - lo) * 0.5 * (1.0 + np.tanh(kappa * (2.0 * u - 1.0)) / np.tanh(kappa))
    if np.isfinite(lo):
        return lo + scale * (u / (1.0 - u)) ** 2
    if np.isfinite(hi):
        return hi - scale * (u[::-1] / (1.0 - u[::-1])) ** 2
    w = 2.0 * u - 1.0
    return scale * w / (1.0 - w * w)


def _central_diff(func: ArrayFunc, x: np.ndarray, h: np.ndarray) -> np.ndarray:
    return (np.asarray(func(x + h), dtype=float) - np.asarray(func(x - h), dtype=float)) / (2.0 * h)


def validate_strongly_proper(triple: ProperTriple, probe_count: int = 64) -> TripleValidation:
    """Probe-based validation of the structural properties.

    The finite checks are necessary, not sufficient: continuity is probed
    by finiteness, the endpoint blow-up of psi by monotone growth along
    the probe tail, and the Lipschitz property of f' by difference
    quotients that must stay bounded under local refinement.  The
    friction coefficient is recovered as the median of -sigma * psi' and
    must match the declared value to 1e-6 relative.
    """
    lo, hi = triple.interval
    x = probe_points(triple.interval, probe_count)
    if np.any(x <= lo) or np.any(x >= hi):
        raise ConfigError("probes escaped the declared state space")
    checks: dict[str, PropertyCheck] = {}

    mu_v = np.asarray(triple.mu(x), dtype=float)
    sig_v = np.asarray(triple.sigma(x), dtype=float)
    psi_v = np.asarray(triple.psi(x), dtype=float)
    finite = np.isfinite(mu_v) & np.isfinite(sig_v) & np.isfinite(psi_v)
    checks["P1_continuous_coefficients"] = PropertyCheck(
        bool(np.all(finite)),
        float(x[np.argmin(finite)]) if not np.all(finite) else float("nan"),
        "mu, sigma, psi finite on all probes",
    )

    nonneg = sig_v >= -1e-12 * (1.0 + np.abs(mu_v))
    checks["sigma_nonnegative"] = PropertyCheck(
        bool(np.all(nonneg)),
        float(x[np.argmin(nonneg)]) if not np.all(nonneg) else float("nan"),
        "volatility must be nonnegative on the state space",
    )

    dec = np.diff(psi_v) < 0.0
    target_mag = 3.0 * (float(np.percentile(np.abs(psi_v), 90)) + 1.0)
    blow_lo = _bracketable(triple.psi, triple.interval, +target_mag)
    blow_hi = _bracketable(triple.psi, triple.interval, -target_mag)
    checks["P2_psi_decreasing_blowup"] = PropertyCheck(
        bool(np.all(dec)) and blow_lo and blow_hi,
        float(x[np.argmin(dec)]) if not np.all(dec) else target_mag,
        "psi strictly decreasing with +inf / -inf endpoint limits",
    )

    lam_est, p3_ok, p3_worst = _friction_probe(triple, x)
    checks["P3_constant_friction"] = PropertyCheck(
        p3_ok, p3_worst, "sigma * psi' constant and negative (= -lam)"
    )
    lam_match = abs(lam_est - triple.lam) <= 1e-6 * triple.lam
    checks["lambda_recovery"] = PropertyCheck(
        bool(lam_match and np.isfinite(lam_est)),
        lam_est,
        f"median friction {lam_est!r} vs declared {triple.lam!r}",
    )

    p4_ok, p4_worst = _lipschitz_probe(triple.f)
    checks["P4_transform_derivative_lipschitz"] = PropertyCheck(
        p4_ok, p4_worst, "difference quotients of f' bounded under refinement"
    )

    y = x
    round_y = np.asarray(triple.f(np.asarray(triple.f_inv(y), dtype=float)), dtype=float)
    scale_y = 1.0 + np.abs(y)
    inv_ok = np.abs(round_y - y) <= 1e-10 * scale_y
    checks["inverse_consistency"] = PropertyCheck(
        bool(np.all(inv_ok)),
        float(y[np.argmin(inv_ok)]) if not np.all(inv_ok) else float("nan"),
        "f(f_inv(y)) = y to 1e-10 relative on probes",
    )

    passed = all(c.passed for c in checks.values())
    return TripleValidation(checks=checks, lambda_recovered=float(lam_est), passed=passed)


def _bracketable(psi: ArrayFunc, interval: tuple[float, float], target: float) -> bool:
    """Can psi(y) = target be bracketed inside I?  Operational blow-up check."""
    lo, hi = interval

    def val(y: float) -> float:
        return float(np.asarray(psi(np.asarray(y, dtype=float))))

    if np.isfinite(lo) and np.isfinite(hi):
        y = 0.5 * (lo + hi)
    elif np.isfinite(lo):
        y = lo + 1.0
    elif np.isfinite(hi):
        y = hi - 1.0
    else:
        y = 0.0
    # psi is decreasing: walk toward the endpoint where target lives
    for _ in range(400):
        v = val(y)
        if not np.isfinite(v):
            return False
        if (target > 0 and v >= target) or (target <= 0 and v <= target):
            return True
        if target > v:  # need larger psi: move toward the lower endpoint
            y = lo + 0.25 * (y - lo) if np.isfinite(lo) else (4.0 * y if y < -1.0 else y - 1.0)
        else:
            y = hi - 0.25 * (hi - y) if np.isfinite(hi) else (4.0 * y if y > 1.0 else y + 1.0)
    return False


def _friction_probe(triple: ProperTriple, x: np.ndarray) -> tuple[float, bool, float]:
    lo, hi = triple.interval
    h = 1e-6 * (1.0 + np.abs(x))
    inside = (x - 2.0 * h > lo) & (x + 2.0 * h < hi)
    sig_v = np.asarray(triple.sigma(x), dtype=float)
    usable = inside & (sig_v > 1e-9 * (1.0 + np.abs(sig_v).max()))
    if not np.any(usable):
        return float("nan"), False, float("nan")
    xs, hs = x[usable], h[usable]
    sig_u = np.asarray(triple.sigma(xs), dtype=float)
    vals = -sig_u * _central_diff(triple.psi, xs, hs)
    # Richardson guard: drop probes where the step-halved derivative disagrees
    vals2 = -sig_u * _central_diff(triple.psi, xs, 2.0 * hs)
    stable = np.abs(vals - vals2) <= 1e-4 * (np.abs(vals) + 1e-300)
    if not np.any(stable):
        return float("nan"), False, float("nan")
    vals, xs = vals[stable], xs[stable]
    lam_est = float(np.median(vals))
    rel = np.abs(vals - lam_est) / max(abs(lam_est), 1e-300)
    ok = bool(np.all(rel < 1e-3) and lam_est > 0.0)
    worst = float(xs[np.argmax(rel)])
    return lam_est, ok, worst


def _lipschitz_probe(f: ArrayFunc, span: float = 6.0, base: int = 65) -> tuple[bool, float]:
    """Difference quotients of f' on a refining grid must not keep growing."""

    def max_quotient(xs: np.ndarray) -> tuple[float, float, float]:
        h = 1e-6 * (1.0 + np.abs(xs))
        fp = _central_diff(f, xs, h)
        q = np.abs(np.diff(fp)) / np.diff(xs)
        i = int(np.argmax(q))
        return float(q[i]), float(xs[i]), float(np.max(np.abs(fp)))

    xs = np.linspace(-span, span, base)
    q0, x0, fp_scale = max_quotient(xs)
    q_prev, x_prev = q0, x0
    width = 2.0 * span / (base - 1)
    for _ in range(3):
        xs = np.linspace(x_prev - width, x_prev + 2.0 * width, base)
        q_new, x_new, _ = max_quotient(xs)
        width = 3.0 * width / (base - 1)
        q_prev, x_prev = max(q_prev, q_new), x_new
    # noise floor: rounding in the central differences masquerades as growth
    floor = max(q0, 1e-4 * fp_scale, 1e-12)
    growing = q_prev > 4.0 * floor
    return (not growing) and q_prev < 1e10, x_prev


# --- transform construction ---------------------------------------------------


def sst_from_psi(
    psi: Callable[[float], float],
    lam: float,
    interval: tuple[float, float],
    tol: float = 1e-12,
) -> Callable:
    """Numeric state-space transform: solve psi(y) = -lam x inside I.

    Brackets by geometric expansion toward the endpoints (psi strictly
    decreasing with full range R), then refines by Brent's method to
    ~tol * scale.  Returns a callable accepting scalars or arrays.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not (lam > 0 and lo < hi):
        raise ConfigError("need lam > 0 and a non-empty interval")
    if np.isfinite(lo) and np.isfinite(hi):
        start = 0.5 * (lo + hi)
    elif np.isfinite(lo):
        start = lo + 1.0
    elif np.isfinite(hi):
        start = hi - 1.0
    else:
        start = 0.0

    def solve_one(x: float) -> float:
        target = -lam * x
        y_lo = y_hi = start
        g = psi(start) - target
        if g == 0.0:
            return start
        steps = 0
        if g < 0.0:  # root lies left of start (psi decreasing)
            while psi(y_lo) - target < 0.0:
                y_hi = y_lo
                y_lo = lo + 0.25 * (y_lo - lo) if np.isfinite(lo) else (y_lo * 4.0 if y_lo < -1 else y_lo - 1.0)
                steps += 1
                if steps > 400:
                    raise ConfigError("transform target not bracketed: endpoint blow-up (P2) fails")
        else:
            while psi(y_hi) - target > 0.0:
                y_lo = y_hi
                y_hi = hi - 0.25 * (hi - y_hi) if np.isfinite(hi) else (y_hi * 4.0 if y_hi > 1 else y_hi + 1.0)
                steps += 1
                if steps > 400:
                    raise ConfigError("transform target not bracketed: endpoint blow-up (P2) fails")
        scale = 1.0 + abs(y_lo) + abs(y_hi)
        return float(brentq(lambda y: psi(y) - target, y_lo, y_hi, xtol=tol * scale, rtol=8.9e-16))

    def f(x):
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0:
            return solve_one(float(arr))
        return np.array([solve_one(v) for v in arr.ravel()]).reshape(arr.shape)

    return f


def _cross_check_transform(triple: ProperTriple) -> None:
    """Assert the closed-form transform against the numeric root-finder."""
    numeric = sst_from_psi(lambda y: float(triple.psi(np.asarray(y))), triple.lam, triple.interval)
    xs = np.array([-2.0, -1.0, -0.5, -0.1, 0.0, 0.1, 0.5, 1.0, 2.0])
    closed = np.asarray(triple.f(xs), dtype=float)
    num = np.asarray(numeric(xs), dtype=float)
    if not np.all(np.abs(closed - num) <= 1e-9 * (1.0 + np.abs(closed))):
        raise ConfigError(
            f"catalog transform for {triple.name!r} disagrees with the numeric root-finder"
        )


# --- the model catalog --------------------------------------------------------


def catalog(model_id: str, parameters: dict, require_strongly_proper: bool = True) -> ProperTriple:
    """Build a catalog model as a fully populated ProperTriple.

    Models (parameter names in brackets):

    * ``power``        dX = (alpha |X|^gamma + beta X) dt + sigma0 |X|^gamma dL
                       [gamma in [0,1], alpha, beta < 0, sigma0 > 0];
                       strongly proper only for gamma = 0 or gamma in [1/2, 1].
    * ``affine_drift`` dX = (alpha + beta X) dt + branchwise sigma_i
                       |alpha + beta X|^delta dL  [alpha, beta < 0,
                       delta in (0,1), sigma1, sigma2 > 0]; strongly
                       proper only for delta in [1/2, 1).
    * ``trig``         bounded state space (0, pi/sigma2):
                       dX = sigma1 sin(sigma2 X) cos(sigma2 X) dt
                            + sin^2(sigma2 X) dL   [sigma1, sigma2 > 0].
    * ``cir``          dX = -gamma X dt + sigma sqrt(|X|) dL on R
                       [gamma > 0, sigma > 0]; friction gamma/2.
    * ``log``          dY = -lam Y log(Y) dt + sigma Y dL on (0, inf)
                       [lam > 0, sigma > 0]; transform e^{sigma x}.

    Out-of-region parameters are rejected with the violated condition.
    """
    key = model_id.strip().lower().replace("-", "_")
    builders = {
        "power": _power_model,
        "affine_drift": _affine_drift_model,
        "trig": _trig_model,
        "cir": _cir_model,
        "log": _log_model,
    }
    if key not in builders:
        raise ConfigError(f"unknown model {model_id!r}; choose from {sorted(builders)}")
    triple = builders[key](dict(parameters))
    if require_strongly_proper and not triple.strongly_proper:
        raise ConfigError(
            f"model {model_id!r} with {parameters!r} is proper but not strongly proper; "
            "pass require_strongly_proper=False to build it anyway"
        )
    _cross_check_transform(triple)
    return triple


def _need(params: dict, *names: str) -> list[float]:
    missing = [n for n in names if n not in params]
    if missing:
        raise ConfigError(f"missing model parameters: {missing}")
    extra = set(params) - set(names)
    if extra:
        raise ConfigError(f"unknown model parameters: {sorted(extra)}")
    return [float(params[n]) for n in names]


def _power_model(params: dict) -> ProperTriple:
    params.setdefault("alpha", 0.0)
    gamma, alpha, beta, sigma0 = _need(params, "gamma", "alpha", "beta", "sigma0")
    if not 0.0 <= gamma <= 1.0:
        raise ConfigError("power model requires gamma in [0, 1]")
    if not beta < 0.0:
        raise ConfigError("power model requires beta < 0 (mean reversion)")
    if not sigma0 > 0.0:
        raise ConfigError("power model requires sigma0 > 0")

    if gamma == 0.0:
        lam = -beta
        interval = (-np.inf, np.inf)
        mu = lambda x: alpha + beta * np.asarray(x, dtype=float)
        sigma = lambda x: np.full_like(np.asarray(x, dtype=float), sigma0)
        psi = lambda x: (alpha + beta * np.asarray(x, dtype=float)) / sigma0
        f = lambda x: sigma0 * np.asarray(x, dtype=float) - alpha / beta
        f_inv = lambda y: (np.asarray(y, dtype=float) + alpha / beta) / sigma0
        strong = True
    elif gamma == 1.0:
        lam = -beta
        interval = (0.0, np.inf)
        mu = lambda x: alpha * np.asarray(x, dtype=float) + beta * np.asarray(x, dtype=float) * np.log(x)
        sigma = lambda x: sigma0 * np.asarray(x, dtype=float)
        psi = lambda x: (alpha + beta * np.log(np.asarray(x, dtype=float))) / sigma0
        f = lambda x: np.exp(sigma0 * np.asarray(x, dtype=float) - alpha / beta)
        f_inv = lambda y: (np.log(np.asarray(y, dtype=float)) + alpha / beta) / sigma0
        strong = True
    else:
        lam = (1.0 - gamma) * (-beta)
        interval = (-np.inf, np.inf)
        mu = lambda x: alpha * np.abs(x) ** gamma + beta * np.asarray(x, dtype=float)
        sigma = lambda x: sigma0 * np.abs(x) ** gamma
        psi = lambda x: (alpha + beta * np.sign(x) * np.abs(x) ** (1.0 - gamma)) / sigma0

        def f(x, _g=gamma):
            w = (1.0 - _g) * sigma0 * np.asarray(x, dtype=float) - alpha / beta
            return np.sign(w) * np.abs(w) ** (1.0 / (1.0 - _g))

        def f_inv(y, _g=gamma):
            w = np.sign(y) * np.abs(y) ** (1.0 - _g)
            return (w + alpha / beta) / ((1.0 - _g) * sigma0)

        strong = gamma >= 0.5
    return ProperTriple(
        interval=interval, mu=mu, sigma=sigma, psi=psi, lam=lam, f=f, f_inv=f_inv,
        strongly_proper=strong, name="power",
        params={"gamma": gamma, "alpha": alpha, "beta": beta, "sigma0": sigma0},
    )


def _affine_drift_model(params: dict) -> ProperTriple:
    params.setdefault("sigma2", params.get("sigma1"))
    alpha, beta, delta, sigma1, sigma2 = _need(params, "alpha", "beta", "delta", "sigma1", "sigma2")
    if not beta < 0.0:
        raise ConfigError("affine-drift model requires beta < 0")
    if not 0.0 < delta < 1.0:
        raise ConfigError("affine-drift model requires delta in (0, 1)")
    if not (sigma1 > 0.0 and sigma2 > 0.0):
        raise ConfigError("affine-drift model requires sigma1, sigma2 > 0")
    lam = (1.0 - delta) * (-beta)
    x_star = -alpha / beta  # drift zero; the volatility branches meet here
    e = 1.0 / (1.0 - delta)
    f1 = (-beta) ** (delta * e) * sigma1**e * (1.0 - delta) ** e
    f2 = (-beta) ** (delta * e) * sigma2**e * (1.0 - delta) ** e

    def branch(x):
        return np.where(np.asarray(x, dtype=float) <= x_star, sigma1, sigma2)

    mu = lambda x: alpha + beta * np.asarray(x, dtype=float)
    sigma = lambda x: branch(x) * np.abs(alpha + beta * np.asarray(x, dtype=float)) ** delta

    def psi(x):
        w = alpha + beta * np.asarray(x, dtype=float)
        return np.sign(w) * np.abs(w) ** (1.0 - delta) / branch(x)

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.where(
            x <= 0.0, x_star - f1 * np.abs(x) ** e, x_star + f2 * np.abs(x) ** e
        )

    def f_inv(y):
        y = np.asarray(y, dtype=float)
        return np.where(
            y <= x_star,
            -((x_star - y) / f1) ** (1.0 - delta),
            ((y - x_star) / f2) ** (1.0 - delta),
        )

    return ProperTriple(
        interval=(-np.inf, np.inf), mu=mu, sigma=sigma, psi=psi, lam=lam, f=f, f_inv=f_inv,
        strongly_proper=delta >= 0.5, name="affine_drift",
        params={"alpha": alpha, "beta": beta, "delta": delta, "sigma1": sigma1, "sigma2": sigma2},
    )


def _trig_model(params: dict) -> ProperTriple:
    sigma1, sigma2 = _need(params, "sigma1", "sigma2")
    if not (sigma1 > 0.0 and sigma2 > 0.0):
        raise ConfigError("trig model requires sigma1, sigma2 > 0")
    lam = sigma1 * sigma2
    hi = math.pi / sigma2

    mu = lambda x: sigma1 * np.sin(sigma2 * np.asarray(x, dtype=float)) * np.cos(sigma2 * np.asarray(x, dtype=float))
    sigma = lambda x: np.sin(sigma2 * np.asarray(x, dtype=float)) ** 2
    psi = lambda x: sigma1 / np.tan(sigma2 * np.asarray(x, dtype=float))
    # arccot into (0, pi) keeps f increasing and the image inside the state space
    f = lambda x: (np.pi / 2.0 + np.arctan(sigma2 * np.asarray(x, dtype=float))) / sigma2
    f_inv = lambda y: -1.0 / (np.tan(sigma2 * np.asarray(y, dtype=float)) * sigma2)
    return ProperTriple(
        interval=(0.0, hi), mu=mu, sigma=sigma, psi=psi, lam=lam, f=f, f_inv=f_inv,
        strongly_proper=True, name="trig", params={"sigma1": sigma1, "sigma2": sigma2},
    )


def _cir_model(params: dict) -> ProperTriple:
    gamma, sigma = _need(params, "gamma", "sigma")
    if not (gamma > 0.0 and sigma > 0.0):
        raise ConfigError("cir model requires gamma > 0 and sigma > 0")
    lam = gamma / 2.0
    mu = lambda x: -gamma * np.asarray(x, dtype=float)
    sig = lambda x: sigma * np.sqrt(np.abs(x))
    psi = lambda x: -(gamma / sigma) * np.sign(x) * np.sqrt(np.abs(x))
    f = lambda x: np.sign(x) * (sigma**2 / 4.0) * np.asarray(x, dtype=float) ** 2
    f_inv = lambda y: np.sign(y) * 2.0 * np.sqrt(np.abs(y)) / sigma
    return ProperTriple(
        interval=(-np.inf, np.inf), mu=mu, sigma=sig, psi=psi, lam=lam, f=f, f_inv=f_inv,
        strongly_proper=True, name="cir", params={"gamma": gamma, "sigma": sigma},
    )


def _log_model(params: dict) -> ProperTriple:
    lam, sigma = _need(params, "lam", "sigma")
    if not (lam > 0.0 and sigma > 0.0):
        raise ConfigError("log model requires lam > 0 and sigma > 0")
    mu = lambda y: -lam * np.asarray(y, dtype=float) * np.log(y)
    sig = lambda y: sigma * np.asarray(y, dtype=float)
    psi = lambda y: -(lam / sigma) * np.log(np.asarray(y, dtype=float))
    f = lambda x: np.exp(sigma * np.asarray(x, dtype=float))
    f_inv = lambda y: np.log(np.asarray(y, dtype=float)) / sigma
    return ProperTriple(
        interval=(0.0, np.inf), mu=mu, sigma=sig, psi=psi, lam=lam, f=f, f_inv=f_inv,
        strongly_proper=True, name="log", params={"lam": lam, "sigma": sigma},
    )


# --- solving and checking ----------------------------------------------------


def solve_sde(
    triple: ProperTriple,
    floup: SamplePath,
    lam_check: float,
    tau: float,
    z: float,
) -> SamplePath:
    """Pathwise SDE solution f(re-anchored Langevin path).

    The Langevin path must have been built with the triple's friction
    coefficient (lam_check re-states it explicitly); z must lie strictly
    inside the state space.  The stationary solution is obtained with
    z = f(Y_tau), in which case the output is f applied pointwise.
    """
    if not triple.strongly_proper:
        raise ConfigError(f"model {triple.name!r} is not strongly proper; cannot solve")
    if abs(lam_check - triple.lam) > 1e-9 * triple.lam:
        raise ConfigError(
            f"rate mismatch: path built with lam={lam_check!r}, triple has {triple.lam!r}"
        )
    lo, hi = triple.interval
    if not (lo < z < hi):
        raise ConfigError(f"start value {z!r} is not strictly inside ({lo}, {hi})")
    anchored = ou_operator(floup, triple.lam, tau, float(np.asarray(triple.f_inv(z))))
    values = np.asarray(triple.f(anchored.values), dtype=float)
    values[anchored.index_at(tau)] = z  # exact anchor by contract
    return SamplePath(t0=anchored.t0, dt=anchored.dt, values=values)


def residual_check(
    X: SamplePath,
    triple: ProperTriple | SdeCoefficients,
    flp: SamplePath,
) -> SolutionReport:
    """Grid residual of the integral equation X_t - X_0 = int mu + int sigma dL.

    The drift integral uses the trapezoid rule, the driver integral the
    left-endpoint Riemann-Stieltjes sum.  If the path leaves the state
    space the report flags a contract failure with the first offending
    time (the coefficients are undefined there).
    """
    require_same_grid(X, flp)
    lo, hi = triple.interval
    strict = not getattr(triple, "closed", False)
    vals = X.values
    inside = ((vals > lo) & (vals < hi)) if strict else ((vals >= lo) & (vals <= hi))
    if not np.all(inside):
        bad = int(np.argmin(inside))
        profile = SamplePath(t0=X.t0, dt=X.dt, values=np.zeros(len(X)))
        return SolutionReport(
            max_residual=float("inf"),
            residual_profile=profile,
            mesh=X.dt,
            contract="fail",
            fail_location=X.t0 + bad * X.dt,
        )
    mu_v = np.asarray(triple.mu(vals), dtype=float)
    sig_v = np.asarray(triple.sigma(vals), dtype=float)
    drift = np.concatenate(([0.0], np.cumsum(X.dt * (mu_v[:-1] + mu_v[1:]) / 2.0)))
    stoch = np.concatenate(([0.0], np.cumsum(sig_v[:-1] * np.diff(flp.values))))
    residual = (vals - vals[0]) - drift - stoch
    profile = SamplePath(t0=X.t0, dt=X.dt, values=residual)
    return SolutionReport(
        max_residual=float(np.max(np.abs(residual))),
        residual_profile=profile,
        mesh=X.dt,
        contract="S1_S2_pass",
    )


def squared_floup(floup: SamplePath, sigma: float, lam_half: float) -> SamplePath:
    """Pointwise square ((sigma/2) Y)^2 of a Langevin path built with rate lam_half.

    Nonnegative by construction; solves the square-root SDE pair with
    full rate 2*lam_half wherever the underlying path is nonnegative.
    """
    if not (sigma > 0.0 and lam_half > 0.0):
        raise ConfigError("sigma and lam_half must be positive")
    return SamplePath(
        t0=floup.t0, dt=floup.dt, values=((sigma / 2.0) * floup.values) ** 2
    )


def squared_floup_sde_forms(sigma: float, lam_half: float) -> tuple[SdeCoefficients, SdeCoefficients]:
    """The two drift/volatility pairs solved by the squared path.

    Both have drift -lam x with lam = 2*lam_half; the volatilities are
    sigma*sqrt(|x|) on R and sigma*sqrt(x) on [0, inf).
    """
    if not (sigma > 0.0 and lam_half > 0.0):
        raise ConfigError("sigma and lam_half must be positive")
    lam = 2.0 * lam_half
    mu = lambda x: -lam * np.asarray(x, dtype=float)
    abs_form = SdeCoefficients(
        interval=(-np.inf, np.inf), mu=mu,
        sigma=lambda x: sigma * np.sqrt(np.abs(x)), name="sqrt_abs",
    )
    pos_form = SdeCoefficients(
        interval=(0.0, np.inf), mu=mu,
        sigma=lambda x: sigma * np.sqrt(np.asarray(x, dtype=float)),
        closed=True, name="sqrt_pos",
    )
    return abs_form, pos_form
