"""Zero-mean two-sided Levy drivers on uniform grids.

The supported drivers are compensated Poisson jump processes: a Poisson
counting process with unit jumps, or a compound Poisson process with a
finite discrete jump law, minus the compensating drift theta*E[jump]*t
that makes the mean exactly zero.  They have finite activity, paths of
finite variation, a finite second moment, and no Brownian part.

A two-sided path is glued at zero from two independent one-sided copies:
the value at a negative time -u is the value of the second, independent
copy at +u.  Both copies draw from RNG streams derived deterministically
from the spec's seed, so regenerating with the same seed is bit-identical.

Jumps are placed per grid cell (a Poisson count per cell of width dt,
thinned across the jump law), not at exact jump times; placement error
within a cell is O(dt), which is below the resolution of every grid
scheme built on top.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, GridSizeError
from .paths import SamplePath

_MASK64 = (1 << 64) - 1

# xor salts for the two one-sided streams of a two-sided path
_POSITIVE_SALT = 0x9E3779B97F4A7C15
_NEGATIVE_SALT = 0xC2B2AE3D27D4EB4F

# probabilities of a discrete jump law must sum to one within this
PROB_SUM_TOL = 1e-12

DEFAULT_MAX_CELLS = 1 << 26


def splitmix64(x: int) -> int:
    """One SplitMix64 step; the stream/replicate seed derivation primitive."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_stream_seed(seed: int, salt: int) -> int:
    return splitmix64(seed ^ salt)


@dataclass(frozen=True)
class LevyDriverSpec:
    """Description of a compensated (compound) Poisson driver.

    ``jumps`` is None for the unit-jump compensated Poisson process,
    otherwise a tuple of (value, probability) atoms of the jump law.
    """

    theta: float
    jumps: tuple[tuple[float, float], ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.theta) and self.theta > 0.0):
            raise ConfigError(f"jump intensity theta must be > 0, got {self.theta!r}")
        if not (0 <= int(self.seed) <= _MASK64):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "seed", int(self.seed))
        if self.jumps is not None:
            atoms = tuple((float(v), float(p)) for v, p in self.jumps)
            if not atoms:
                raise ConfigError("compound jump law must have at least one atom")
            values = np.array([v for v, _ in atoms])
            probs = np.array([p for _, p in atoms])
            if not np.all(np.isfinite(values)):
                raise ConfigError("jump values must be finite")
            if np.any(probs < 0.0):
                raise ConfigError("jump probabilities must be >= 0")
            if abs(probs.sum() - 1.0) > PROB_SUM_TOL:
                raise ConfigError(f"jump probabilities sum to {probs.sum()!r}, not 1")
            if float(np.sum(probs * values**2)) <= 0.0:
                raise ConfigError("jump law must have a strictly positive second moment")
            object.__setattr__(self, "jumps", atoms)

    @property
    def kind(self) -> str:
        return "compensated_poisson" if self.jumps is None else "compound_poisson_compensated"

    @property
    def mean_jump(self) -> float:
        if self.jumps is None:
            return 1.0
        return float(sum(v * p for v, p in self.jumps))

    @property
    def second_moment_jump(self) -> float:
        if self.jumps is None:
            return 1.0
        return float(sum(v * v * p for v, p in self.jumps))

    def with_seed(self, seed: int) -> "LevyDriverSpec":
        return replace(self, seed=int(seed) & _MASK64)


def second_moment(spec: LevyDriverSpec) -> float:
    """E[L(1)^2] = theta * E[jump^2]; the variance rate of the driver."""
    return spec.theta * spec.second_moment_jump


def psi_L(spec: LevyDriverSpec, u: float) -> complex:
    """Characteristic exponent: theta * sum_j p_j (e^{i u x_j} - 1 - i u x_j)."""
    atoms = spec.jumps if spec.jumps is not None else ((1.0, 1.0),)
    total = 0j
    for x, p in atoms:
        total += p * (np.exp(1j * u * x) - 1.0 - 1j * u * x)
    return complex(spec.theta * total)


def _one_sided_increments(rng: np.random.Generator, spec: LevyDriverSpec, n_cells: int, dt: float) -> np.ndarray:
    """Compensated increments of one one-sided copy over ``n_cells`` cells."""
    drift = spec.theta * spec.mean_jump * dt
    if spec.jumps is None:
        counts = rng.poisson(spec.theta * dt, size=n_cells)
        return counts.astype(float) - drift
    inc = np.zeros(n_cells)
    # Poisson thinning: one independent count stream per atom, in law order.
    for value, prob in spec.jumps:
        if prob > 0.0:
            inc += value * rng.poisson(spec.theta * prob * dt, size=n_cells)
    return inc - drift


def _stream(spec: LevyDriverSpec, salt: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_stream_seed(spec.seed, salt)))


def two_sided_increments(spec: LevyDriverSpec, n_neg: int, n_pos: int, dt: float) -> np.ndarray:
    """Per-cell increments of the glued path, cells ordered left to right.

    Cell ``k`` (k = -n_neg .. n_pos-1) covers [k*dt, (k+1)*dt].  On the
    negative half the path increment is minus the increment of the
    independent mirrored copy.
    """
    if dt <= 0.0:
        raise ConfigError("dt must be positive")
    parts = []
    if n_neg > 0:
        inc_neg = _one_sided_increments(_stream(spec, _NEGATIVE_SALT), spec, n_neg, dt)
        parts.append(-inc_neg[::-1])
    if n_pos > 0:
        parts.append(_one_sided_increments(_stream(spec, _POSITIVE_SALT), spec, n_pos, dt))
    return np.concatenate(parts) if len(parts) > 1 else parts[0]


def sample_two_sided_levy(
    spec: LevyDriverSpec,
    t_min: float,
    t_max: float,
    dt: float,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> SamplePath:
    """Sample the two-sided driver on the lattice i*dt covering [t_min, t_max].

    The grid always contains 0 with value exactly 0; requested endpoints
    are snapped to the nearest lattice nodes.
    """
    if dt <= 0.0 or not np.isfinite(dt):
        raise ConfigError(f"dt must be positive, got {dt!r}")
    if not (t_min < 0.0 < t_max):
        raise ConfigError(f"need t_min < 0 < t_max, got [{t_min}, {t_max}]")
    n_neg = max(int(round(-t_min / dt)), 1)
    n_pos = max(int(round(t_max / dt)), 1)
    if n_neg + n_pos > max_cells:
        raise GridSizeError(
            f"grid of {n_neg + n_pos} cells exceeds the cap of {max_cells}"
        )
    inc_neg = _one_sided_increments(_stream(spec, _NEGATIVE_SALT), spec, n_neg, dt)
    inc_pos = _one_sided_increments(_stream(spec, _POSITIVE_SALT), spec, n_pos, dt)
    values = np.empty(n_neg + n_pos + 1)
    values[n_neg] = 0.0
    values[n_neg + 1 :] = np.cumsum(inc_pos)
    # L(-k dt) equals the mirrored copy's value at +k dt
    values[:n_neg] = np.cumsum(inc_neg)[::-1]
    return SamplePath(t0=-n_neg * dt, dt=dt, values=values)


def derive_replicate_seed(master_seed: int, replicate: int) -> int:
    """Deterministic per-replicate seed for ensemble runs."""
    return splitmix64((master_seed + (replicate + 1) * 0x9E3779B97F4A7C15) & _MASK64)
