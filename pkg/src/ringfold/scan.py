"""Cellwise maps over the mean-zero plane for three oscillators.

Cell centers ``phi`` are mapped to angles ``theta = P^T phi``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RingfoldError
from .orthant import classify_subsets, delta_p, delta_q
from .ring_core import as_gamma, order_parameter, projection_basis, reduced_determinant

DEFAULT_RANGE = (-np.pi * np.sqrt(2), np.pi * np.sqrt(2))
QUANTITIES = ("delta_p", "delta_q", "order_parameter")


@dataclass(frozen=True)
class DensityGrid:
    """``values[i, j]`` belongs to the cell centered at ``(phi1[j], phi2[i])``.

    Class maps use -1, 0, 1 and NaN for undefined cells.
    """

    resolution: int
    phi_range: tuple[float, float]
    values: np.ndarray
    quantity: str
    phi1: np.ndarray
    phi2: np.ndarray

    def theta_at(self, i: int, j: int) -> np.ndarray:
        return projection_basis(3).T @ np.array([self.phi1[j], self.phi2[i]])


def cell_centers(resolution: int, phi_range) -> np.ndarray:
    lo, hi = map(float, phi_range)
    if not hi > lo:
        raise DomainError("phi_range must be increasing")
    h = (hi - lo) / resolution
    return lo + h * (np.arange(resolution) + 0.5)


def _grid_thetas(resolution: int, phi_range):
    c = cell_centers(resolution, phi_range)
    p1, p2 = np.meshgrid(c, c)  # row index follows phi2
    phi = np.stack([p1, p2], axis=-1)
    return c, phi @ projection_basis(3)


def _cell_value(theta: np.ndarray, quantity: str) -> float:
    if quantity == "order_parameter":
        return order_parameter(theta)
    try:
        reports = classify_subsets(theta)
        fn = delta_p if quantity == "delta_p" else delta_q
        return float(fn(None, reports=reports))
    except RingfoldError:
        return np.nan


def density_scan(
    n: int = 3,
    quantity: str = "delta_p",
    resolution: int = 200,
    phi_range=DEFAULT_RANGE,
    threads: int = 1,
) -> DensityGrid:
    if n != 3:
        raise DomainError("density scans are defined for n = 3 only")
    if quantity not in QUANTITIES:
        raise DomainError(f"quantity must be one of {QUANTITIES}")
    if resolution < 16:
        raise DomainError("resolution must be >= 16")
    c, thetas = _grid_thetas(resolution, phi_range)
    row = lambda i: [_cell_value(thetas[i, j], quantity) for j in range(resolution)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            rows = list(ex.map(row, range(resolution)))
    else:
        rows = [row(i) for i in range(resolution)]
    return DensityGrid(resolution, tuple(map(float, phi_range)), np.array(rows, dtype=float), quantity, c, c.copy())


def level_set_scan(gamma, resolution: int = 200, phi_range=DEFAULT_RANGE) -> DensityGrid:
    """det_Red on the grid; its zero set is where neighbouring cells change sign."""
    gamma = as_gamma(gamma)
    if gamma.size != 3:
        raise DomainError("level-set scans are defined for n = 3 only")
    if resolution < 16:
        raise DomainError("resolution must be >= 16")
    c, thetas = _grid_thetas(resolution, phi_range)
    vals = reduced_determinant(thetas, gamma)
    return DensityGrid(resolution, tuple(map(float, phi_range)), np.asarray(vals), "det_red", c, c.copy())


def sign_change_mask(values: np.ndarray) -> np.ndarray:
    """Cells with a horizontal or vertical neighbour of opposite sign."""
    s = np.sign(values)
    m = np.zeros(values.shape, bool)
    h = s[:, 1:] * s[:, :-1] < 0
    v = s[1:, :] * s[:-1, :] < 0
    m[:, 1:] |= h
    m[:, :-1] |= h
    m[1:, :] |= v
    m[:-1, :] |= v
    return m
