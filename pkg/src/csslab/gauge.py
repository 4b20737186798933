"""Nonlocal gauge potentials of a radial field.

For a density ``f = |u|^2``::

    A_theta(f)(r) = -1/2 int_0^r f(rho) rho d rho
    A_0(f)(r)     = -int_r^inf A_theta(f)(rho) / rho * f(rho) d rho

``A_theta`` is a prefix integral and ``A_0`` a suffix integral, both O(n).  The
discrete ``A_0`` is taken as the exact transpose of the discrete ``A_theta`` map,
which keeps ``int A_0 |u|^2 = 2 int (A_theta / r)^2 |u|^2`` an identity on the grid
and makes ``A_0`` the exact variation of the gauge charge term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, CorruptedStateError
from .grid import RadialField, RadialGrid


@dataclass(frozen=True)
class GaugePotentials:
    a_theta: np.ndarray
    a_theta_over_r: np.ndarray
    a_zero: np.ndarray


def _density(density, grid: RadialGrid) -> np.ndarray:
    f = np.asarray(density, dtype=float)
    if f.shape != (grid.n,):
        raise ContractViolation(f"density has shape {f.shape}, grid has {grid.n} nodes")
    if not np.all(np.isfinite(f)):
        raise CorruptedStateError("non-finite density")
    if np.any(f < 0):
        raise ContractViolation("density must be nonnegative")
    return f


def over_r(a_theta: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """``A_theta / r`` with the limit value 0 at the origin."""
    out = np.zeros_like(a_theta)
    out[1:] = a_theta[1:] / grid.nodes[1:]
    return out


def a_theta_of(density, grid: RadialGrid) -> np.ndarray:
    """``A_theta(f)(r_j) = -1/2 int_0^{r_j} f rho d rho``."""
    f = _density(density, grid)
    return -0.5 * grid.cumulative(f)


def a_zero_of(density, a_theta, grid: RadialGrid) -> np.ndarray:
    """``A_0(f)(r_j) = -int_{r_j}^{r_max} (A_theta / rho) f d rho``, zero tail past r_max."""
    f = _density(density, grid)
    a = np.asarray(a_theta, dtype=float)
    if a.shape != f.shape:
        raise ContractViolation("a_theta and density lengths differ")
    w = grid.cell_weights
    v = np.zeros_like(f)
    r = grid.nodes
    v[1:] = w[1:] * f[1:] * a[1:] / r[1:] ** 2
    return -grid.cumulative_adjoint(v) / w


def gauge_from_density(density, grid: RadialGrid) -> GaugePotentials:
    a = a_theta_of(density, grid)
    return GaugePotentials(a, over_r(a, grid), a_zero_of(density, a, grid))


def gauge_from_field(u: RadialField) -> GaugePotentials:
    """All potential samples needed by the nonlinear terms ``A_0 u`` and ``(A_theta/r)^2 u``."""
    return gauge_from_density(u.density, u.grid)
