"""Coupled mesh-refinement families.

Convergence diagnostics compare the same realization across grid
resolutions.  Coupling is exact: the driver is simulated once on the
finest lattice and coarsened by keeping every k-th node (cell increments
aggregate exactly), so differences between meshes reflect only the
scheme, not fresh randomness.  All fractional builds share one
fixed-time past window so that refinement changes nothing but dt.
"""

from __future__ import annotations

from .drivers import LevyDriverSpec, sample_two_sided_levy
from .errors import ConfigError
from .fractional import FlpParams, simulate_flp
from .paths import SamplePath


def coupled_flp_family(
    spec: LevyDriverSpec,
    d: float,
    window: float,
    t_span: tuple[float, float],
    n_values: tuple[int, ...],
    max_cells: int = 1 << 26,
) -> dict[int, SamplePath]:
    """Fractional paths of one realization at several resolutions.

    ``window`` (>= 1, an integer number of time units) fixes the
    truncated past for every resolution; every n must divide max(n).
    Returns {n: fractional path on t_span at dt = 1/n}.
    """
    if window < 1 or window != int(window):
        raise ConfigError("window must be an integer number of time units >= 1")
    ns = sorted(set(int(n) for n in n_values))
    n_max = ns[-1]
    for n in ns:
        if n_max % n != 0:
            raise ConfigError(f"every resolution must divide the finest one ({n} vs {n_max})")
    t_hi = float(t_span[1])
    driver = sample_two_sided_levy(
        spec, t_min=-float(window), t_max=max(t_hi, 1.0 / n_max), dt=1.0 / n_max,
        max_cells=max_cells,
    )
    out: dict[int, SamplePath] = {}
    for n in ns:
        drv = driver.coarsen(n_max // n) if n != n_max else driver
        params = FlpParams.for_time_window(d, n, float(window))
        out[n] = simulate_flp(drv, params, t_span, max_cells=max_cells)
    return out
