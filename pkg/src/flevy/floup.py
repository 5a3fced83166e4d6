"""Mean-reverting transforms of fractional paths and their second-order theory.

The central object is the stationary solution Y of the Langevin equation
dY = -lam Y dt + dX driven by a fractional path X, realized pathwise as
Y_t = int_{-inf}^t e^{-lam (t-s)} dX_s.  Three constructions are provided:

* ``floup_via_ibp``    -- integration by parts: e^{-lam t} ( e^{lam t} X_t
                          - e^{lam a} X_a - lam int_a^t X_s e^{lam s} ds ),
                          with the ordinary integral by trapezoid and all
                          exponentials kept in decaying form e^{-lam(t-s)}.
* ``euler_langevin``   -- explicit Euler on the Langevin equation.
* ``ou_operator``      -- re-anchoring map (tau, z): t -> Y_t
                          - e^{-lam(t-tau)} Y_tau + e^{-lam(t-tau)} z, which
                          still solves the Langevin equation and equals z
                          at tau.

Analytic companions: the covariance of pathwise integrals against the
fractional process (a weighted double integral with the singular kernel
|t-s|^{2d-1}), the closed-form convolution identity behind it, and the
large-lag autocovariance expansion whose leading term decays like
s^{2d-1} (long-range dependence).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.signal import lfilter

from .errors import ConfigError, NumericalError
from .fractional import _check_d, _quad
from .paths import SamplePath

_GAMMA = math.gamma

# largest exponent magnitude allowed inside exp() before the overflow guard trips
_EXP_GUARD = 700.0


def choose_past_cutoff(lam: float, d: float, tol: float = 1e-8, t_min: float = 0.0) -> float:
    """Cutoff a < t_min with e^{-lam (t_min - a)} |a|^{d+0.6} < tol.

    Sub-power-law growth of the fractional path toward -infinity makes the
    discarded boundary term e^{-lam(t-a)} X_a negligible at this cutoff.
    """
    d = _check_d(d)
    if not (lam > 0 and tol > 0):
        raise ConfigError("lam and tol must be positive")

    def h(a):
        return -lam * (t_min - a) + (d + 0.6) * math.log(max(abs(a), 1.0)) - math.log(tol)

    hi = t_min - 1.0
    if h(hi) <= 0.0:
        return hi
    lo = hi
    while h(lo) > 0.0:
        lo = t_min - 2.0 * (t_min - lo)
        if t_min - lo > 1e9:
            raise NumericalError("could not satisfy the cutoff inequality")
    root = float(brentq(h, lo, hi))
    return root - 1.0 / lam  # one extra e-fold keeps the inequality strict


@dataclass(frozen=True)
class FloupParams:
    """Mean-reversion rate and past-truncation point of the improper integral."""

    lam: float
    past_cutoff: float
    cutoff_tol: float = 1e-8

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0.0):
            raise ConfigError(f"mean-reversion rate must be > 0, got {self.lam!r}")
        if not (np.isfinite(self.past_cutoff) and self.past_cutoff < 0.0):
            raise ConfigError(f"past cutoff must be < 0, got {self.past_cutoff!r}")
        if not self.cutoff_tol > 0:
            raise ConfigError("cutoff_tol must be positive")

    def check_cutoff(self, d: float, t_min: float = 0.0) -> None:
        """Raise unless the truncated boundary term is below cutoff_tol."""
        a = self.past_cutoff
        bound = math.exp(-self.lam * (t_min - a)) * abs(a) ** (_check_d(d) + 0.6)
        if bound >= self.cutoff_tol:
            raise ConfigError(
                f"past cutoff {a} too shallow: boundary bound {bound:.3e} "
                f">= tolerance {self.cutoff_tol:.3e}"
            )

    @classmethod
    def auto(cls, lam: float, d: float, t_min: float = 0.0, tol: float = 1e-8) -> "FloupParams":
        return cls(lam=lam, past_cutoff=choose_past_cutoff(lam, d, tol, t_min), cutoff_tol=tol)


def floup_via_ibp(
    flp: SamplePath,
    params: FloupParams,
    t_span: tuple[float, float] | None = None,
) -> SamplePath:
    """Mean-reverting path via the integration-by-parts representation.

    Exact in the driver values; the only discretization is the trapezoid
    rule on the ordinary integral.  The running integral obeys
    I_{j+1} = q I_j + dt (X_j q + X_{j+1})/2 with q = e^{-lam dt}, which
    reproduces the global trapezoid sum while keeping every exponential
    in the decaying form e^{-lam (t - s)}.
    """
    lam = params.lam
    a = params.past_cutoff
    if a < flp.t0 - flp.dt * 1e-8:
        raise ConfigError(f"fractional path starts at {flp.t0}, after the cutoff {a}")
    ia = flp.index_at(flp.t0 + flp.dt * round((a - flp.t0) / flp.dt))
    vals = flp.values[ia:]
    dt = flp.dt
    q = math.exp(-lam * dt)
    c = np.empty_like(vals)
    c[0] = 0.0
    c[1:] = dt * (vals[:-1] * q + vals[1:]) / 2.0
    running = lfilter([1.0], [1.0, -q], c)
    decay = np.exp(-lam * dt * np.arange(vals.size))
    out = vals - decay * vals[0] - lam * running
    path = SamplePath(t0=flp.t0 + ia * dt, dt=dt, values=out)
    return path if t_span is None else path.restrict(*t_span)


def euler_langevin(flp: SamplePath, lam: float, tau: float, x0: float) -> SamplePath:
    """Explicit Euler for dX = -lam X dt + dL on [tau, end], X_tau = x0."""
    if not lam > 0:
        raise ConfigError("lam must be positive")
    i = flp.index_at(tau)
    dt = flp.dt
    if lam * dt >= 2.0:
        raise ConfigError(f"explicit Euler unstable: lam*dt = {lam * dt} >= 2")
    if len(flp) - i < 2:
        raise ConfigError("fewer than 2 grid nodes available after tau")
    forcing = np.empty(len(flp) - i)
    forcing[0] = x0
    forcing[1:] = np.diff(flp.values[i:])
    values = lfilter([1.0], [1.0, -(1.0 - lam * dt)], forcing)
    return SamplePath(t0=flp.t0 + i * dt, dt=dt, values=values)


def ou_operator(floup: SamplePath, lam: float, tau: float, z: float) -> SamplePath:
    """Re-anchor a Langevin solution to pass through z at tau.

    out_t = Y_t + e^{-lam (t - tau)} (z - Y_tau).  The output at tau is
    z exactly, and the gap to the input decays (grows, before tau) at
    exactly the rate e^{-lam (t - tau)}.
    """
    if not lam > 0:
        raise ConfigError("lam must be positive")
    if not np.isfinite(z):
        raise ConfigError("z must be finite")
    i = floup.index_at(tau)
    t_anchor = floup.t0 + i * floup.dt
    if lam * (t_anchor - floup.t0) > _EXP_GUARD:
        raise NumericalError("overflow guard: lam * (tau - t0) exceeds exp range")
    rel = floup.t0 + floup.dt * np.arange(len(floup)) - t_anchor
    out = floup.values + np.exp(-lam * rel) * (z - floup.values[i])
    out[i] = z  # exact by contract; the float expression above is z only up to rounding
    return SamplePath(t0=floup.t0, dt=floup.dt, values=out)


def gripenberg_norros(t: float, s: float, d: float) -> float:
    """Closed form of int_{-inf}^{min(t,s)} (t-u)^{d-1} (s-u)^{d-1} du.

    Equals Gamma(d) Gamma(1-2d) / Gamma(1-d) * |t-s|^{2d-1}; diverges on
    the diagonal t = s.
    """
    d = _check_d(d)
    if t == s:
        raise NumericalError("convolution integral diverges at t == s")
    return _GAMMA(d) * _GAMMA(1.0 - 2.0 * d) / _GAMMA(1.0 - d) * abs(t - s) ** (2.0 * d - 1.0)


def gripenberg_norros_quadrature(t: float, s: float, d: float, tol: float = 1e-9) -> float:
    """Adaptive-quadrature evaluation of the convolution integral above.

    Independent reference route for the closed form: the integral is
    reduced to two smooth pieces by the substitutions v = w^{1/d} near
    the singular endpoint and v = delta/z, z = y^{1/(1-2d)} on the tail.
    """
    d = _check_d(d)
    if t == s:
        raise NumericalError("convolution integral diverges at t == s")
    delta = abs(t - s)
    inv_d = 1.0 / d
    near, _ = _quad(
        lambda w: (delta + w**inv_d) ** (d - 1.0), 0.0, delta**d, epsabs=tol, epsrel=tol
    )
    near /= d
    e = 1.0 / (1.0 - 2.0 * d)
    tail, _ = _quad(lambda y: (1.0 + y**e) ** (d - 1.0), 0.0, 1.0, epsabs=tol, epsrel=tol)
    tail *= delta ** (2.0 * d - 1.0) * e
    return near + tail


def cov_rs_integrals(
    f,
    g,
    d: float,
    m2: float,
    quad_tol: float = 1e-8,
    domain: tuple[float, float] | None = None,
) -> float:
    """Covariance of two pathwise integrals against the fractional process.

    E[ int f dX int g dX ] = Gamma(1-2d) m2 / (Gamma(d) Gamma(1-d))
                             * int int f(t) g(s) |t-s|^{2d-1} ds dt.

    The diagonal singularity (integrable: 2d-1 > -1) is removed in the
    inner variable by v = |t-s|^{2d}.  If ``domain`` is omitted it is
    auto-expanded until both integrands are negligible on the new shell;
    tolerances propagate multiplicatively to the nested quadratures.
    """
    d = _check_d(d)
    if not m2 > 0:
        raise ConfigError("m2 must be positive")
    if not quad_tol > 0:
        raise ConfigError("quad_tol must be positive")
    pref = _GAMMA(1.0 - 2.0 * d) * m2 / (_GAMMA(d) * _GAMMA(1.0 - d))

    if domain is None:
        domain = _detect_support(f, g)
    lo, hi = float(domain[0]), float(domain[1])
    if not lo < hi:
        raise ConfigError("empty quadrature domain")

    p = 2.0 * d
    inv_p = 1.0 / p

    def inner(t: float) -> float:
        left = right = 0.0
        if t > lo:
            left, _ = _quad(
                lambda v: g(t - v**inv_p), 0.0, (t - lo) ** p,
                epsabs=quad_tol * 1e-2, epsrel=1e-9,
            )
        if t < hi:
            right, _ = _quad(
                lambda v: g(t + v**inv_p), 0.0, (hi - t) ** p,
                epsabs=quad_tol * 1e-2, epsrel=1e-9,
            )
        return (left + right) / p

    span = hi - lo
    val, err = _quad(lambda t: f(t) * inner(t), lo, hi, epsabs=quad_tol / (2.0 * pref))
    if err * pref > 20.0 * quad_tol * max(1.0, span):
        raise NumericalError("double quadrature did not reach the requested tolerance")
    return pref * val


def _detect_support(f, g, start: float = 1.0, rel: float = 1e-9) -> tuple[float, float]:
    """Expand a symmetric bounding box until both functions are tiny outside."""
    probes = np.linspace(0.0, 1.0, 17)

    def shell_max(func, lo, hi):
        return float(np.max(np.abs([func(x) for x in lo + (hi - lo) * probes])))

    lo, hi = -start, start
    peak = max(shell_max(f, lo, hi), shell_max(g, lo, hi), 1e-300)
    for _ in range(60):
        grown = False
        for sgn in (-1, 1):
            edge = lo if sgn < 0 else hi
            new_edge = 2.0 * edge if edge * sgn > 0 else edge + sgn * start
            cap = max(
                shell_max(f, min(edge, new_edge), max(edge, new_edge)),
                shell_max(g, min(edge, new_edge), max(edge, new_edge)),
            )
            peak = max(peak, cap)
            if cap > rel * peak:
                if sgn < 0:
                    lo = new_edge
                else:
                    hi = new_edge
                grown = True
        if not grown:
            return lo, hi
    raise NumericalError("could not bracket the support of the integrands")


def floup_autocov_asymptotic(s: float, N: int, d: float, lam: float, m2: float) -> float:
    """Large-lag autocovariance expansion of the mean-reverting process.

    Partial sum of N terms; the leading term is
    Gamma(1-2d) m2 / (Gamma(d) Gamma(1-d)) * lam^{-2} s^{2d-1}, so the
    autocovariance is non-summable: long-range dependence.
    """
    d = _check_d(d)
    if not s > 0:
        raise ConfigError(f"lag s must be positive, got {s!r}")
    if int(N) != N or N < 1:
        raise ConfigError("N must be a positive integer")
    if not (lam > 0 and m2 > 0):
        raise ConfigError("lam and m2 must be positive")
    pref = _GAMMA(1.0 - 2.0 * d) * m2 / (2.0 * d * (2.0 * d + 1.0) * _GAMMA(d) * _GAMMA(1.0 - d))
    total = 0.0
    for n in range(1, int(N) + 1):
        prod = 1.0
        for k in range(0, 2 * n):
            prod *= 2.0 * d + 1.0 - k
        total += prod * lam ** (-2.0 * n) * s ** (2.0 * d + 1.0 - 2.0 * n)
    return pref * total
