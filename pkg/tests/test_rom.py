import warnings

import numpy as np
import pytest

from msrom.avf import AvfConfig
from msrom.deim import build_deim_operator, deims_from_snapshots
from msrom.fom import assemble_snapshots, collect_nonlinear_snapshots, run_fom
from msrom.metrics import e_sol
from msrom.models import ModelError, kdv_model, nls1d_model
from msrom.pod import compute_pods
from msrom.rom import (PD_ROM, P_ROM, build_reduced_system, energy_bound_trace, galerkin_energy_trace,
                       reduced_energy, run_rom)

from conftest import small_models

CFG = AvfConfig(dt=0.02)


def reduce_model(model, T=1.0, n=8, m=10):
    traj, energy = run_fom(model, CFG, T)
    pods = compute_pods([s.data for s in assemble_snapshots(traj, model)], n=n)
    bases = [p.V for p in pods]
    nl = [s.data for s in collect_nonlinear_snapshots(traj, model)]
    deims, _ = deims_from_snapshots(nl, [bases[c] for c in model.term_component], n=m)
    return traj, energy, bases, deims


@pytest.fixture(scope="module")
def reduced_cases():
    out = {}
    for name, model in small_models().items():
        out[name] = (model,) + reduce_model(model)
    return out


@pytest.mark.parametrize("name", ["kdv", "nls1d", "zk", "nls2d"])
@pytest.mark.parametrize("variant", [P_ROM, PD_ROM])
def test_reduced_energy_behaviour(reduced_cases, name, variant):
    model, traj, energy, bases, deims = reduced_cases[name]
    rs = build_reduced_system(model, bases, deims if variant == PD_ROM else None)
    assert rs.variant == variant
    rtraj, lifted = run_rom(rs, CFG, 1.0)
    assert rtraj.states.shape == (rs.dim, traj.states.shape[1])
    g = galerkin_energy_trace(rs, rtraj).values
    if variant == P_ROM:
        # exact conservation of the Galerkin energy, whatever the basis
        assert np.max(np.abs(g - g[0])) <= 1e-10 * abs(g[0])
    else:
        b = energy_bound_trace(rs, rtraj, CFG.dt)
        assert b.violations == 0
    assert lifted.values[0] == pytest.approx(model.energy(rs.lift(rs.project(model.initial_state()))))


def test_full_rank_basis_reproduces_fom():
    model = kdv_model(nx=32)
    traj, _ = run_fom(model, CFG, 1.0)
    S = assemble_snapshots(traj, model)[0].data
    U = np.linalg.svd(S)[0]
    rs = build_reduced_system(model, [U])
    rtraj, _ = run_rom(rs, CFG, 1.0)
    assert e_sol(rs.lift(rtraj.states), traj.states) < 1e-10


def test_full_rank_coupled_model():
    model = nls1d_model(nx=48)
    traj, _ = run_fom(model, CFG, 0.5)
    rng = np.random.default_rng(3)
    Q1 = np.linalg.qr(rng.standard_normal((48, 48)))[0]
    Q2 = np.linalg.qr(rng.standard_normal((48, 48)))[0]
    rs = build_reduced_system(model, [Q1, Q2])
    rtraj, _ = run_rom(rs, CFG, 0.5)
    assert e_sol(rs.lift(rtraj.states), traj.states) < 1e-10


def test_deim_with_full_nonlinear_rank_matches_galerkin():
    model = kdv_model(nx=48)
    x = model.grid.x()
    k = 2 * np.pi / model.period
    V = np.linalg.qr(np.column_stack([np.ones_like(x), np.cos(k * x), np.sin(k * x)]))[0]
    z0 = 1.0 + 0.5 * np.cos(k * x)
    prom = build_reduced_system(model, [V])
    ptraj, _ = run_rom(prom, CFG, 1.0, z0=z0)
    F = model.nonlinear(prom.lift(ptraj.states))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        (op,), _ = deims_from_snapshots([F], [V], n=12)
    assert op.m == 5
    pdrom = build_reduced_system(model, [V], [op])
    dtraj, _ = run_rom(pdrom, CFG, 1.0, z0=z0)
    np.testing.assert_allclose(dtraj.states, ptraj.states, atol=1e-11)


def test_zero_initial_data(reduced_cases):
    model, _, _, bases, deims = reduced_cases["kdv"]
    rs = build_reduced_system(model, bases, deims)
    rtraj, lifted = run_rom(rs, CFG, 0.2, z0=np.zeros(model.size))
    assert not np.any(rtraj.states)
    assert not np.any(lifted.values)


def test_reduced_energy_definition(reduced_cases, rng):
    model, _, _, bases, _ = reduced_cases["nls1d"]
    z = rng.standard_normal(model.size)
    alpha = np.concatenate([V.T @ c for V, c in zip(bases, model.split(z))])
    lifted = np.concatenate([V @ (V.T @ c) for V, c in zip(bases, model.split(z))])
    assert reduced_energy(model, bases, alpha) == pytest.approx(model.energy(lifted), rel=1e-13)
    in_span = lifted
    assert reduced_energy(model, bases, alpha) == pytest.approx(model.energy(in_span), rel=1e-13)


def test_pd_rom_never_touches_full_vectors(reduced_cases):
    model, _, _, bases, deims = reduced_cases["nls2d"]
    rs = build_reduced_system(model, bases, deims)
    m = sum(d.m for d in deims)
    assert rs.system.lift.shape == (model.n_components * m, rs.dim)
    assert rs.system.B.shape == (rs.dim, m)
    seen = []
    original = model.term

    def spy(i, comps, nodes=None):
        seen.append(comps[0].shape[0])
        return original(i, comps, nodes)

    model.term = spy
    try:
        run_rom(rs, CFG, 0.1)
    finally:
        del model.term
    assert seen and max(seen) == max(d.m for d in deims) < model.n_nodes


def test_invalid_bases(reduced_cases):
    model, _, _, bases, deims = reduced_cases["kdv"]
    with pytest.raises(ModelError):
        build_reduced_system(model, [bases[0][:, :0]])
    with pytest.raises(ModelError):
        build_reduced_system(model, [bases[0][:-1]])
    with pytest.raises(ModelError):
        build_reduced_system(model, bases, deims + deims)
    other = build_deim_operator(deims[0].Phi, deims[0].indices, bases[0][:, :3])
    with pytest.raises(ModelError):
        build_reduced_system(model, bases, [other])


def test_bound_requires_hyper_reduction(reduced_cases):
    model, _, _, bases, _ = reduced_cases["kdv"]
    rs = build_reduced_system(model, bases)
    rtraj, _ = run_rom(rs, CFG, 0.1)
    with pytest.raises(ValueError):
        energy_bound_trace(rs, rtraj, CFG.dt)


def test_nls_reduced_mass_is_skew(reduced_cases):
    model, _, _, bases, _ = reduced_cases["nls1d"]
    C = build_reduced_system(model, bases).ops["C"]
    np.testing.assert_allclose(C, -C.T)
