"""Grid calculus: trapezoid quadrature, second differences, resampling."""

import numpy as np
import numpy.testing as npt
import pytest

from funcnet.grids import (
    Grid,
    GridFunction,
    GridSurface,
    laplacian,
    resample_linear,
    resample_values,
    second_derivative,
    second_diff,
    second_diff_adjoint,
    trapezoid,
)


def test_grid_basics():
    g = Grid(5)
    npt.assert_allclose(g.points, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert g.h == 0.25
    npt.assert_allclose(g.trapezoid_weights.sum(), 1.0)
    assert Grid(5) == Grid(5)
    assert Grid(5) != Grid(6)


def test_grid_rejects_degenerate():
    with pytest.raises(ValueError):
        Grid(1)


def test_trapezoid_exact_for_linear():
    # the composite trapezoid rule integrates piecewise-linear functions exactly
    g = Grid(17)
    f = GridFunction.from_callable(g, lambda s: 3.0 * s - 1.0)
    npt.assert_allclose(trapezoid(f), 0.5, atol=1e-14)


def test_trapezoid_converges_quadratically():
    exact = (1.0 - np.cos(1.0))
    errs = []
    for m in (11, 21, 41):
        f = GridFunction.from_callable(Grid(m), np.sin)
        errs.append(abs(trapezoid(f) - exact))
    # halving h should cut the error by about 4
    assert errs[0] / errs[1] > 3.5
    assert errs[1] / errs[2] > 3.5


def test_grid_function_validates():
    g = Grid(4)
    with pytest.raises(ValueError):
        GridFunction(g, np.zeros(5))
    with pytest.raises(ValueError):
        GridFunction(g, [0.0, np.nan, 0.0, 0.0])


def test_second_diff_exact_on_quadratics():
    g = Grid(30)
    vals = 2.0 * g.points**2 - g.points + 0.25
    d = second_diff(vals, g.h)
    npt.assert_allclose(d[1:-1], 4.0, atol=1e-9)
    assert d[0] == 0.0 and d[-1] == 0.0


def test_second_diff_needs_three_points():
    with pytest.raises(ValueError):
        second_diff(np.zeros(2), 0.5)


def test_second_diff_axis_handling():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 7, 5))
    d0 = second_diff(a, 0.1, axis=1)
    d1 = np.stack([second_diff(a[i], 0.1, axis=0) for i in range(4)])
    npt.assert_allclose(d0, d1)


def test_second_diff_adjoint_is_transpose():
    # <D u, v> == <u, D^T v> for every pair, i.e. the adjoint is exact
    rng = np.random.default_rng(7)
    h = 1.0 / 12
    for _ in range(10):
        u = rng.normal(size=13)
        v = rng.normal(size=13)
        lhs = second_diff(u, h) @ v
        rhs = u @ second_diff_adjoint(v, h)
        npt.assert_allclose(lhs, rhs, rtol=1e-12)


def test_second_diff_adjoint_matches_dense_matrix():
    m, h = 9, 0.125
    dense = np.stack([second_diff(e, h) for e in np.eye(m)]).T
    rng = np.random.default_rng(3)
    v = rng.normal(size=m)
    npt.assert_allclose(second_diff_adjoint(v, h), dense.T @ v, rtol=1e-12)


def test_second_derivative_wrapper():
    g = Grid(25)
    f = GridFunction.from_callable(g, lambda s: s**2)
    d = second_derivative(f)
    assert d.grid is g
    npt.assert_allclose(d.values[1:-1], 2.0, atol=1e-9)


def test_laplacian_on_polynomial_surface():
    gr, gc = Grid(21), Grid(16)
    vals = gr.points[:, None] ** 2 + 3.0 * gc.points[None, :] ** 2
    lap = laplacian(GridSurface(gr, gc, vals))
    npt.assert_allclose(lap.values[1:-1, 1:-1], 8.0, atol=1e-8)
    # corners are zero-padded in both directions
    assert lap.values[0, 0] == 0.0
    assert lap.values[-1, -1] == 0.0


def test_grid_surface_validates_shape():
    with pytest.raises(ValueError):
        GridSurface(Grid(3), Grid(4), np.zeros((4, 3)))


def test_resample_linear_identity_and_refinement():
    g = Grid(11)
    f = GridFunction.from_callable(g, lambda s: 2.0 * s + 1.0)
    same = resample_linear(f, Grid(11))
    npt.assert_allclose(same.values, f.values)
    assert same.values is not f.values

    fine = resample_linear(f, Grid(41))
    npt.assert_allclose(fine.values, 2.0 * Grid(41).points + 1.0, atol=1e-12)


def test_resample_values_batch():
    src, dst = Grid(20), Grid(50)
    rng = np.random.default_rng(5)
    batch = rng.normal(size=(6, src.m))
    out = resample_values(batch, src, dst)
    assert out.shape == (6, dst.m)
    for i in range(6):
        npt.assert_allclose(
            out[i], np.interp(dst.points, src.points, batch[i])
        )
    # shared endpoints are preserved exactly
    npt.assert_allclose(out[:, 0], batch[:, 0])
    npt.assert_allclose(out[:, -1], batch[:, -1])
