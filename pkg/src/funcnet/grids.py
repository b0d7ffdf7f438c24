"""Uniform grids on [0, 1] and the discrete calculus built on them.

Every curve in this package lives on a uniform grid over the unit
interval; every integral is a composite trapezoid sum on that grid.
The second-difference operators defined here are zero-padded at the
boundary so that their output has the same length as their input.
"""

from __future__ import annotations

import numpy as np


class Grid:
    """A uniform grid of ``m`` points spanning [0, 1] inclusive."""

    __slots__ = ("m", "points", "h", "_weights")

    def __init__(self, m: int):
        if m < 2:
            raise ValueError(f"grid needs at least 2 points, got {m}")
        self.m = int(m)
        self.points = np.linspace(0.0, 1.0, self.m)
        self.h = 1.0 / (self.m - 1)
        self._weights = None

    @property
    def trapezoid_weights(self) -> np.ndarray:
        """Quadrature weights w with sum(w * f) = trapezoid integral of f."""
        if self._weights is None:
            w = np.full(self.m, self.h)
            w[0] = w[-1] = 0.5 * self.h
            self._weights = w
        return self._weights

    def __eq__(self, other):
        return isinstance(other, Grid) and other.m == self.m

    def __hash__(self):
        return hash(("Grid", self.m))

    def __repr__(self):
        return f"Grid(m={self.m})"


class GridFunction:
    """A real-valued function sampled on a :class:`Grid`."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.m,):
            raise ValueError(
                f"values shape {values.shape} does not match grid with m={grid.m}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function contains non-finite values")
        self.grid = grid
        self.values = values

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "GridFunction":
        return cls(grid, fn(grid.points))

    def __repr__(self):
        return f"GridFunction(m={self.grid.m})"


class GridSurface:
    """A bivariate function sampled on the product of two grids.

    ``values[i, j]`` is the surface at ``(row_grid.points[i],
    col_grid.points[j])``.
    """

    __slots__ = ("row_grid", "col_grid", "values")

    def __init__(self, row_grid: Grid, col_grid: Grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (row_grid.m, col_grid.m):
            raise ValueError(
                f"values shape {values.shape} does not match grids "
                f"({row_grid.m}, {col_grid.m})"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("grid surface contains non-finite values")
        self.row_grid = row_grid
        self.col_grid = col_grid
        self.values = values

    def __repr__(self):
        return f"GridSurface({self.row_grid.m}x{self.col_grid.m})"


def trapezoid(f: GridFunction) -> float:
    """Composite trapezoid approximation of the integral over [0, 1]."""
    return float(f.grid.trapezoid_weights @ f.values)


def second_diff(values: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    """Central second difference along ``axis``, zero at both endpoints.

    Interior: (f[i-1] - 2 f[i] + f[i+1]) / h^2.  Exact for quadratics.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[axis] < 3:
        raise ValueError("need at least 3 points for a second difference")
    v = np.moveaxis(values, axis, -1)
    out = np.zeros_like(v)
    out[..., 1:-1] = (v[..., :-2] - 2.0 * v[..., 1:-1] + v[..., 2:]) / (h * h)
    return np.moveaxis(out, -1, axis)


def second_diff_adjoint(u: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    """Transpose of :func:`second_diff` under the standard inner product.

    Needed to form exact gradients of quadratic roughness penalties:
    for J(f) = ||W D f||^2 the gradient is 2 D^T (W^2 D f).
    """
    u = np.asarray(u, dtype=float)
    v = np.moveaxis(u, axis, -1).copy()
    # rows 0 and m-1 of the forward operator are identically zero
    v[..., 0] = 0.0
    v[..., -1] = 0.0
    out = np.zeros_like(v)
    out -= 2.0 * v
    out[..., :-1] += v[..., 1:]
    out[..., 1:] += v[..., :-1]
    out /= h * h
    return np.moveaxis(out, -1, axis)


def second_derivative(f: GridFunction) -> GridFunction:
    """Second derivative by central differences, zero-padded at the ends."""
    return GridFunction(f.grid, second_diff(f.values, f.grid.h))


def laplacian(w: GridSurface) -> GridSurface:
    """Sum of the two directional second differences of a surface.

    Each direction is zero-padded at its own boundary, so corners are
    zero and edges carry only the tangential term.
    """
    d_rows = second_diff(w.values, w.row_grid.h, axis=0)
    d_cols = second_diff(w.values, w.col_grid.h, axis=1)
    return GridSurface(w.row_grid, w.col_grid, d_rows + d_cols)


def resample_linear(f: GridFunction, target: Grid) -> GridFunction:
    """Piecewise-linear resampling onto ``target``; exact at shared points."""
    if target == f.grid:
        return GridFunction(target, f.values.copy())
    return GridFunction(target, np.interp(target.points, f.grid.points, f.values))


def resample_values(values: np.ndarray, source: Grid, target: Grid) -> np.ndarray:
    """Row-wise linear resampling for a batch of curves (n, source.m)."""
    values = np.asarray(values, dtype=float)
    if source == target:
        return values.copy()
    return np.apply_along_axis(
        lambda row: np.interp(target.points, source.points, row), -1, values
    )
