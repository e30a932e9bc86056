import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from msrom.operators import Grid, GridError, apply, build_2d_diffs, build_centered_diff


def dense_centered(n, dx):
    D = np.zeros((n, n))
    for i in range(n):
        D[i, (i + 1) % n] = 1.0
        D[i, (i - 1) % n] = -1.0
    return D / (2 * dx)


@given(st.integers(3, 80), st.floats(1e-3, 10.0))
@settings(max_examples=40, deadline=None)
def test_centered_diff_matches_dense_stencil(n, dx):
    D = build_centered_diff(n, dx)
    assert sp.issparse(D)
    np.testing.assert_allclose(D.toarray(), dense_centered(n, dx), rtol=0, atol=1e-14 / dx)


@given(st.integers(3, 60))
@settings(max_examples=30, deadline=None)
def test_skew_symmetric(n):
    D = build_centered_diff(n, 0.1).toarray()
    np.testing.assert_array_equal(D, -D.T)


def test_constants_in_null_space():
    D = build_centered_diff(50, 0.2)
    np.testing.assert_allclose(D @ np.ones(50), 0.0, atol=1e-14)


def test_small_grid_rejected():
    with pytest.raises(GridError):
        build_centered_diff(2, 0.1)


def test_second_order_consistency():
    errors = []
    for n in (64, 128, 256):
        L = 2 * np.pi
        x = np.arange(n) * L / n
        D = build_centered_diff(n, L / n)
        errors.append(np.max(np.abs(D @ np.sin(x) - np.cos(x))))
    rates = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    np.testing.assert_allclose(rates, 2.0, atol=0.05)


def test_third_power_consistency():
    errors = []
    for n in (128, 256, 512):
        L = 2 * np.pi
        x = np.arange(n) * L / n
        D = build_centered_diff(n, L / n)
        errors.append(np.max(np.abs(D @ (D @ (D @ np.sin(x))) + np.cos(x))))
    rates = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(rates > 1.9)


@pytest.mark.parametrize("nx,ny", [(5, 4), (7, 7), (3, 9)])
def test_2d_kronecker_against_dense_loops(nx, ny):
    grid = Grid(0.0, 1.0, nx, -1.0, 2.0, ny)
    Dx, Dy = build_2d_diffs(grid)
    N = nx * ny
    Ex = np.zeros((N, N))
    Ey = np.zeros((N, N))
    # lexicographic, x fastest: node (i, j) -> j * nx + i
    for j in range(ny):
        for i in range(nx):
            r = j * nx + i
            Ex[r, j * nx + (i + 1) % nx] += 1 / (2 * grid.dx)
            Ex[r, j * nx + (i - 1) % nx] -= 1 / (2 * grid.dx)
            Ey[r, ((j + 1) % ny) * nx + i] += 1 / (2 * grid.dy)
            Ey[r, ((j - 1) % ny) * nx + i] -= 1 / (2 * grid.dy)
    np.testing.assert_allclose(Dx.toarray(), Ex, atol=1e-13)
    np.testing.assert_allclose(Dy.toarray(), Ey, atol=1e-13)


def test_2d_operators_commute_and_are_skew():
    Dx, Dy = build_2d_diffs(Grid(0.0, 2.0, 6, 0.0, 3.0, 5))
    np.testing.assert_allclose((Dx @ Dy - Dy @ Dx).toarray(), 0.0, atol=1e-12)
    np.testing.assert_allclose((Dx + Dx.T).toarray(), 0.0)


def test_2d_derivative_of_plane_waves():
    L = 2 * np.pi
    grid = Grid(0.0, L, 64, 0.0, L, 48)
    X, Y = grid.nodes()
    Dx, Dy = build_2d_diffs(grid)
    u = np.sin(X) * np.cos(2 * Y)
    # centered differences scale a mode of wavenumber k by sin(k h) / h
    sx = np.sin(grid.dx) / grid.dx
    sy = np.sin(2 * grid.dy) / grid.dy
    np.testing.assert_allclose(Dx @ u, sx * np.cos(X) * np.cos(2 * Y), atol=1e-12)
    np.testing.assert_allclose(Dy @ u, -sy * np.sin(X) * np.sin(2 * Y), atol=1e-12)


def test_grid_properties():
    g = Grid(-20.0, 60.0, 1000)
    assert g.dims == 1 and g.size == 1000
    assert g.dx == pytest.approx(0.08)
    assert g.cell == pytest.approx(0.08)
    assert g.x()[0] == -20.0 and g.x()[-1] == pytest.approx(60.0 - 0.08)
    g2 = Grid(0.0, 20.0, 100, 0.0, 20.0, 50)
    assert g2.size == 5000 and g2.cell == pytest.approx(0.2 * 0.4)
    X, Y = g2.nodes()
    assert X[1] - X[0] == pytest.approx(0.2) and Y[1] == Y[0]


def test_grid_validation():
    with pytest.raises(GridError):
        Grid(1.0, 0.0, 10)
    with pytest.raises(GridError):
        Grid(0.0, 1.0, 2)


def test_apply_checks_length():
    D = build_centered_diff(10, 0.1)
    with pytest.raises(GridError):
        apply(D, np.ones(9))
