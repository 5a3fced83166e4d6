"""Grid-level Riemann-Stieltjes calculus and p-variation.

Integrals of gridded functions use left-endpoint sums,

    int f dh  ~  sum_i f_i (h_{i+1} - h_i),

which matches adaptedness conventions and makes the density formula
int f d(phi) = int f h dg an algebraic identity when phi is the
cumulative left-sum of h against g.  The complementary-variation
condition p^-1 + q^-1 > 1 that guarantees convergence of such sums under
refinement is not checkable from finite data and is therefore a
documented caller contract; ``p_variation`` provides the diagnostic.

p-variation is computed exactly over subdivisions through grid nodes by
O(m^2) dynamic programming; an exhaustive reference implementation over
all 2^(m-2) subdivisions certifies it on small paths.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .errors import ConfigError
from .paths import GridFunction, SamplePath, require_same_grid
from .summation import compensated_dot, compensated_sum


def rs_integral(f: SamplePath, h: SamplePath) -> float:
    """Left-endpoint Riemann-Stieltjes sum of f against h on a shared grid.

    Linear in both arguments and additive over interval splits at grid
    nodes (the sums telescope exactly).
    """
    require_same_grid(f, h)
    return compensated_dot(f.values[:-1], np.diff(h.values))


def cumulative_rs_integral(h: SamplePath, g: SamplePath) -> GridFunction:
    """phi(x) = int_a^x h dg on the grid: phi_0 = 0, increments h_i (g_{i+1}-g_i).

    Together with left-endpoint sums this makes int f d(phi) equal to
    int f*h dg exactly, term by term.
    """
    require_same_grid(h, g)
    increments = h.values[:-1] * np.diff(g.values)
    values = np.concatenate(([0.0], np.cumsum(increments)))
    return GridFunction(t0=h.t0, dt=h.dt, values=values, role="integrator")


def p_variation(f: SamplePath, p: float) -> float:
    """Exact sup of sum |f(x_i) - f(x_{i-1})|^p over grid subdivisions.

    Dynamic programming over nodes: best[j] = max_i (best[i] + |f_j-f_i|^p),
    O(m^2).  Equals the total variation for p = 1.
    """
    if not p >= 1.0:
        raise ConfigError(f"p must be >= 1, got {p!r}")
    v = np.asarray(f.values, dtype=float)
    best = np.zeros(v.size)
    for j in range(1, v.size):
        best[j] = np.max(best[:j] + np.abs(v[j] - v[:j]) ** p)
    return float(best[-1])


def p_variation_brute_force(f: SamplePath, p: float) -> float:
    """Exhaustive reference: maximize over all subdivisions through nodes.

    Exponential in the path length; intended for certification on paths
    with at most ~14 nodes.
    """
    if not p >= 1.0:
        raise ConfigError(f"p must be >= 1, got {p!r}")
    v = np.asarray(f.values, dtype=float)
    m = v.size
    if m > 22:
        raise ConfigError("brute-force p-variation is limited to short paths")
    interior = range(1, m - 1)
    worst = 0.0
    for r in range(0, m - 1):
        for combo in combinations(interior, r):
            nodes = (0, *combo, m - 1)
            s = compensated_sum(np.abs(np.diff(v[list(nodes)])) ** p)
            worst = max(worst, s)
    return worst


def chain_rule_residual(F, F_prime, g: SamplePath) -> float:
    """| F(g_end) - F(g_start) - int (F' o g) dg | with the left-endpoint sum.

    For F with locally Lipschitz derivative and g of bounded p-variation
    (p < 2, caller contract) the residual vanishes under grid refinement.
    """
    gv = g.values
    integral = compensated_dot(np.asarray(F_prime(gv[:-1]), dtype=float), np.diff(gv))
    return abs(float(F(gv[-1])) - float(F(gv[0])) - integral)
