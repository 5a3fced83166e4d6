"""Uniformly gridded sample paths.

``SamplePath`` is the single carrier used for drivers, fractional
processes, their Ornstein-Uhlenbeck transforms, and SDE solutions: an
origin time ``t0``, a positive step ``dt``, and a value per node.  Node
``i`` lives at ``t0 + i * dt`` exactly; no per-node times are stored.

``GridFunction`` is the same carrier with an optional role tag, used by
the grid-level Riemann-Stieltjes calculus.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, GridMismatchError

# Tolerance (relative to dt) used when snapping a time to a grid node.
NODE_SNAP_RTOL = 1e-8


@dataclass(frozen=True)
class SamplePath:
    """Real-valued path sampled on the uniform grid t0 + i*dt."""

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if not np.isfinite(self.t0):
            raise ConfigError("t0 must be finite")
        if not (self.dt > 0.0 and np.isfinite(self.dt)):
            raise ConfigError("dt must be positive and finite")
        if vals.ndim != 1 or vals.size < 2:
            raise ConfigError("values must be a 1-d sequence of length >= 2")
        if not np.all(np.isfinite(vals)):
            raise ConfigError("path values must all be finite")

    def __len__(self) -> int:
        return self.values.size

    @property
    def t_end(self) -> float:
        return self.t0 + (len(self) - 1) * self.dt

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    def index_at(self, t: float) -> int:
        """Grid index of time ``t``, which must lie on a node."""
        x = (t - self.t0) / self.dt
        i = int(round(x))
        if abs(x - i) > NODE_SNAP_RTOL * max(1.0, abs(x)) + NODE_SNAP_RTOL:
            raise ConfigError(f"time {t!r} is not a grid node (t0={self.t0}, dt={self.dt})")
        if not 0 <= i < len(self):
            raise ConfigError(f"time {t!r} lies outside the grid [{self.t0}, {self.t_end}]")
        return i

    def value_at(self, t: float) -> float:
        return float(self.values[self.index_at(t)])

    def covers(self, t_min: float, t_max: float) -> bool:
        slack = NODE_SNAP_RTOL * self.dt
        return self.t0 <= t_min + slack and self.t_end >= t_max - slack

    def restrict(self, t_min: float, t_max: float) -> "SamplePath":
        """Sub-path on grid nodes inside [t_min, t_max] (endpoints snapped outward)."""
        i0 = int(np.ceil((t_min - self.t0) / self.dt - NODE_SNAP_RTOL))
        i1 = int(np.floor((t_max - self.t0) / self.dt + NODE_SNAP_RTOL))
        i0 = max(i0, 0)
        i1 = min(i1, len(self) - 1)
        if i1 - i0 < 1:
            raise ConfigError(f"restriction [{t_min}, {t_max}] keeps fewer than 2 nodes")
        return replace(self, t0=self.t0 + i0 * self.dt, values=self.values[i0 : i1 + 1])

    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    def coarsen(self, factor: int = 2) -> "SamplePath":
        """Keep every ``factor``-th node; exact refinement coupling for mesh studies."""
        if factor < 1 or (len(self) - 1) % factor != 0:
            raise ConfigError("coarsening factor must divide the number of cells")
        return replace(self, dt=self.dt * factor, values=self.values[::factor])


def require_same_grid(a: SamplePath, b: SamplePath) -> None:
    if len(a) != len(b):
        raise GridMismatchError(f"grid lengths differ: {len(a)} vs {len(b)}")
    tol = NODE_SNAP_RTOL * min(a.dt, b.dt)
    if abs(a.t0 - b.t0) > tol or abs(a.dt - b.dt) > tol:
        raise GridMismatchError(
            f"grids differ: (t0={a.t0}, dt={a.dt}) vs (t0={b.t0}, dt={b.dt})"
        )


@dataclass(frozen=True)
class GridFunction(SamplePath):
    """A sample path tagged by its role in an integral (integrand/integrator)."""

    role: str = ""


def as_grid_function(path: SamplePath, role: str = "") -> GridFunction:
    return GridFunction(t0=path.t0, dt=path.dt, values=path.values, role=role)
