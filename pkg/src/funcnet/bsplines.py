"""Clamped B-spline bases on [0, 1].

Knots are equally spaced in the interior with the first and last knot
repeated ``order`` times, so the basis is a partition of unity and the
first/last basis functions interpolate the endpoints.  Evaluation goes
through scipy's sparse design-matrix routine; derivative evaluation and
the Gram matrices needed by roughness penalties are assembled here.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import BSpline

from .grids import Grid, GridFunction

# Refined grid used for Gram-matrix quadrature.  Products of basis
# derivatives are only piecewise smooth, so the integration grid is made
# much denser than any evaluation grid in the package.
GRAM_QUAD_POINTS = 8193


class BSplineBasis:
    """A family of ``num_basis`` clamped B-splines of a given order."""

    def __init__(self, num_basis: int, order: int = 4):
        if order < 1:
            raise ValueError(f"order must be positive, got {order}")
        if num_basis < order:
            raise ValueError(
                f"need at least `order` basis functions ({order}), got {num_basis}"
            )
        self.num_basis = int(num_basis)
        self.order = int(order)
        self.degree = self.order - 1
        n_interior = self.num_basis - self.order
        interior = np.linspace(0.0, 1.0, n_interior + 2)[1:-1]
        self.knots = np.concatenate(
            [np.zeros(self.order), interior, np.ones(self.order)]
        )
        self._gram_cache: dict = {}

    def design(self, x) -> np.ndarray:
        """Evaluation matrix: entry (i, d) is basis function d at x[i]."""
        x = np.asarray(x, dtype=float)
        return BSpline.design_matrix(x, self.knots, self.degree).toarray()

    def derivative_design(self, x, deriv: int) -> np.ndarray:
        """Like :meth:`design` but for the ``deriv``-th derivative."""
        if deriv == 0:
            return self.design(x)
        if deriv > self.degree:
            x = np.asarray(x, dtype=float)
            return np.zeros((x.size, self.num_basis))
        x = np.asarray(x, dtype=float)
        out = np.empty((x.size, self.num_basis))
        coef = np.zeros(self.num_basis)
        for d in range(self.num_basis):
            coef[d] = 1.0
            spline = BSpline(self.knots, coef.copy(), self.degree)
            out[:, d] = spline.derivative(deriv)(x)
            coef[d] = 0.0
        return out

    def gram(self, da: int, db: int, num_points: int = GRAM_QUAD_POINTS) -> np.ndarray:
        """Gram matrix G[a, b] = integral of v_a^(da) * v_b^(db) over [0, 1].

        Assembled by dense trapezoid quadrature on a refined grid; cached
        per (da, db, num_points).
        """
        key = (da, db, num_points)
        if key not in self._gram_cache:
            quad = Grid(num_points)
            left = self.derivative_design(quad.points, da)
            right = left if db == da else self.derivative_design(quad.points, db)
            self._gram_cache[key] = left.T @ (quad.trapezoid_weights[:, None] * right)
        return self._gram_cache[key]

    def __eq__(self, other):
        return (
            isinstance(other, BSplineBasis)
            and other.num_basis == self.num_basis
            and other.order == self.order
        )

    def __hash__(self):
        return hash(("BSplineBasis", self.num_basis, self.order))

    def __repr__(self):
        return f"BSplineBasis(num_basis={self.num_basis}, order={self.order})"


def bspline_design(basis: BSplineBasis, grid: Grid) -> np.ndarray:
    """Design matrix of the basis on a grid (grid.m x num_basis)."""
    return basis.design(grid.points)


def basis_functional(basis: BSplineBasis, f: GridFunction) -> np.ndarray:
    """Vector of integrals of each basis function against f (trapezoid)."""
    design = basis.design(f.grid.points)
    return design.T @ (f.grid.trapezoid_weights * f.values)


def curvature_penalty_matrix(basis: BSplineBasis) -> np.ndarray:
    """Matrix G with coef^T G coef = integral of the squared second derivative."""
    if basis.order < 3:
        raise ValueError("curvature penalty needs at least quadratic splines")
    return basis.gram(2, 2)


def laplacian_penalty_matrix(
    row_basis: BSplineBasis, col_basis: BSplineBasis
) -> np.ndarray:
    """Quadratic form of the squared-Laplacian roughness of a tensor surface.

    For w(s, t) = sum_{c,d} W[c, d] v_c(s) u_d(t), the double integral of
    (w_ss + w_tt)^2 equals vec(W)^T P vec(W) with

        P = G2s x G0t + Xs x Xt^T + Xs^T x Xt + G0s x G2t

    where G0 / G2 are the plain and second-derivative Gram matrices of
    each axis and X[a, b] = integral of v_a'' v_b.  P is symmetric PSD.
    """
    if row_basis.order < 3 or col_basis.order < 3:
        raise ValueError("Laplacian penalty needs at least quadratic splines")
    g0s = row_basis.gram(0, 0)
    g2s = row_basis.gram(2, 2)
    xs = row_basis.gram(2, 0)
    g0t = col_basis.gram(0, 0)
    g2t = col_basis.gram(2, 2)
    xt = col_basis.gram(2, 0)
    p = (
        np.kron(g2s, g0t)
        + np.kron(xs, xt.T)
        + np.kron(xs.T, xt)
        + np.kron(g0s, g2t)
    )
    return 0.5 * (p + p.T)
