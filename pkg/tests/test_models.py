import numpy as np
import pytest

from msrom.avf import AvfConfig
from msrom.fom import run_fom
from msrom.models import (MODELS, KdV, ModelError, NLS1D, discrete_energy, kdv_model, nls1d_model,
                          nls2d_model, zk_model)
from msrom.operators import Grid, GridError

from conftest import small_models

NAMES = ["kdv", "nls1d", "zk", "nls2d"]


@pytest.mark.parametrize("name", NAMES)
def test_terms_are_gradients_of_potential(name, rng):
    model = small_models()[name]
    idx = rng.choice(model.n_nodes, size=5, replace=False)
    comps = [rng.standard_normal(5) for _ in range(model.n_components)]
    h = 1e-6
    for i in range(len(model.terms)):
        c = model.term_component[i]
        up = [v.copy() for v in comps]
        dn = [v.copy() for v in comps]
        up[c] += h
        dn[c] -= h
        fd = (model.potential(up, idx) - model.potential(dn, idx)) / (2 * h)
        np.testing.assert_allclose(model.term(i, comps, idx), fd, rtol=1e-7, atol=1e-8)


@pytest.mark.parametrize("name", NAMES)
def test_sampled_terms_match_full_evaluation(name, rng):
    model = small_models()[name]
    z = rng.standard_normal(model.size)
    comps = model.split(z)
    idx = np.sort(rng.choice(model.n_nodes, size=7, replace=False))
    full = [model.term(i, comps) for i in range(len(model.terms))]
    for i in range(len(model.terms)):
        np.testing.assert_allclose(model.term(i, [c[idx] for c in comps], idx), full[i][idx])


@pytest.mark.parametrize("name", NAMES)
def test_terms_accept_column_blocks(name, rng):
    model = small_models()[name]
    Z = rng.standard_normal((model.size, 3))
    n = model.n_nodes
    comps = [Z[c * n:(c + 1) * n] for c in range(model.n_components)]
    for i in range(len(model.terms)):
        block = model.term(i, comps)
        for k in range(3):
            np.testing.assert_allclose(block[:, k], model.term(i, [c[:, k] for c in comps]))


@pytest.mark.parametrize("name", NAMES)
def test_fom_conserves_energy_on_coarse_grid(name):
    model = small_models()[name]
    _, energy = run_fom(model, AvfConfig(dt=0.02), 0.5)
    e = energy.values
    assert np.max(np.abs(e - e[0])) / abs(e[0]) < 1e-10


@pytest.mark.parametrize("name", NAMES)
def test_identity_basis_reproduces_full_operators(name):
    model = small_models()[name]
    I = np.eye(model.n_nodes)
    bases = [I] * model.n_components
    ops = model.reduced_operators(bases)
    C, A, B = model.linear_system()
    np.testing.assert_allclose(ops["C"], C.toarray(), atol=1e-12)
    np.testing.assert_allclose(ops["A"], A.toarray(), atol=1e-8 * abs(A).max())
    np.testing.assert_allclose(ops["B"], B.toarray(), atol=1e-12)
    z = model.initial_state()
    assert model.galerkin_energy(bases, ops, z) == pytest.approx(model.energy(z), rel=1e-12)


def test_kdv_energy_by_hand():
    model = kdv_model(nx=16, eta=3.0, gamma=0.5)
    u = np.sin(np.arange(16))
    dx = 20.0 / 16
    du = np.array([(u[(i + 1) % 16] - u[i - 1]) / (2 * dx) for i in range(16)])
    expected = dx * np.sum(3.0 / 6 * u ** 3 - 0.5 * 0.25 * du ** 2)
    assert discrete_energy(model, u) == pytest.approx(expected, rel=1e-13)


def test_kdv_exact_is_periodic_translation():
    model = kdv_model(nx=200)
    # the soliton travels one period in period / c time units
    np.testing.assert_allclose(model.exact(20.0 / 4.0), model.exact(0.0), atol=1e-12)
    assert model.exact(0.0).max() == pytest.approx(2.0, rel=1e-3)


def test_nls1d_exact_modulus_is_sech():
    model = nls1d_model(nx=400)
    p, q = model.split(model.exact(1.5))
    np.testing.assert_allclose(np.hypot(p, q), 1.0 / np.cosh(model.grid.x() - 3.0), atol=1e-14)


def test_nls2d_exact_is_stationary_in_modulus():
    model = nls2d_model(nx=20)
    a, b = model.split(model.exact(0.0)), model.split(model.exact(3.0))
    np.testing.assert_allclose(np.hypot(*a), np.hypot(*b), atol=1e-14)


@pytest.mark.parametrize("name", NAMES)
def test_exact_energy_nearly_constant_on_fine_grids(name):
    factory = MODELS[name]
    model = factory(nx=800) if name in ("kdv", "nls1d") else factory(nx=100)
    e0 = model.energy(model.exact(0.0))
    e1 = model.energy(model.exact(0.37))
    assert abs(e1 - e0) <= 1e-6 * abs(e0)


def test_parameter_validation():
    with pytest.raises(ModelError):
        nls1d_model(beta=0.0)
    with pytest.raises(ModelError):
        kdv_model(gamma=0.0)
    with pytest.raises(GridError):
        KdV(Grid(0, 1, 10, 0, 1, 10))
    with pytest.raises(GridError):
        zk_model(grid=Grid(0, 1, 10))


def test_state_length_checked():
    model = small_models()["nls1d"]
    with pytest.raises(ModelError):
        model.split(np.zeros(model.size - 1))


def test_basis_checks():
    model = small_models()["nls1d"]
    V = np.linalg.qr(np.random.default_rng(0).standard_normal((model.n_nodes, 3)))[0]
    with pytest.raises(ModelError):
        model.reduced_operators([V])
    with pytest.raises(ModelError):
        model.reduced_operators([V, V[:-1]])
    with pytest.raises(ModelError):
        model.reduced_operators([V, V[:, :0]])


def test_reference_domains():
    assert kdv_model().grid.x_right == 20.0 and kdv_model().grid.nx == 1000
    g = nls1d_model().grid
    assert (g.x_left, g.x_right) == (-20.0, 60.0)
    g = zk_model().grid
    assert (g.nx, g.ny, g.x_right, g.y_right) == (100, 100, 20.0, 20.0)
    g = nls2d_model().grid
    assert (g.x_left, g.x_right, g.y_left, g.y_right) == (-6.0, 6.0, -6.0, 6.0)
    assert isinstance(MODELS["nls1d"](), NLS1D)
