import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from msrom.deim import DeimError, build_deim_operator, compute_deim, deim_from_snapshots, qdeim_select


def random_orthonormal(rng, N, m):
    return np.linalg.qr(rng.standard_normal((N, m)))[0]


def inv_norm(Phi, idx):
    return 1.0 / np.linalg.svd(Phi[idx], compute_uv=False)[-1]


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_qdeim_within_known_bound(seed):
    rng = np.random.default_rng(seed)
    N, m = 30, 4
    Phi = random_orthonormal(rng, N, m)
    idx = qdeim_select(Phi)
    assert len(set(idx)) == m
    # worst case for pivoted QR selection
    bound = np.sqrt(N - m + 1) * np.sqrt(4.0 ** m + 6 * m - 1) / 3
    assert inv_norm(Phi, idx) <= bound


def test_qdeim_against_exhaustive_search(rng):
    N, m = 9, 3
    worse = 0
    for _ in range(20):
        Phi = random_orthonormal(rng, N, m)
        norms = sorted(inv_norm(Phi, list(c)) for c in itertools.combinations(range(N), m))
        got = inv_norm(Phi, qdeim_select(Phi))
        assert got >= norms[0] - 1e-12
        worse += got > norms[len(norms) // 2]
    assert worse <= 2


def test_interpolation_exact_in_span(rng):
    Phi = random_orthonormal(rng, 40, 6)
    V = random_orthonormal(rng, 40, 3)
    op = build_deim_operator(Phi, qdeim_select(Phi), V)
    y = Phi @ rng.standard_normal(6)
    np.testing.assert_allclose(op.interpolate(y), y, atol=1e-12)
    np.testing.assert_allclose(op.W[op.indices], np.eye(6), atol=1e-12)
    np.testing.assert_allclose(op.projected, V.T @ op.W)


def test_operator_norms(rng):
    Phi = random_orthonormal(rng, 25, 5)
    op = build_deim_operator(Phi, qdeim_select(Phi), Phi)
    assert op.inv_norm == pytest.approx(inv_norm(Phi, op.indices))
    assert op.complement_norm == 1.0
    assert op.bound_constant == pytest.approx(op.inv_norm)
    square = random_orthonormal(rng, 4, 4)
    full = build_deim_operator(square, qdeim_select(square), square)
    assert full.complement_norm < 1e-12


def test_rank_deficiency_names_column():
    Phi = np.zeros((10, 3))
    Phi[0, 0] = 1.0
    Phi[1, 1] = 1.0
    with pytest.raises(DeimError, match="column 2"):
        qdeim_select(Phi)


def test_too_many_columns():
    with pytest.raises(DeimError):
        qdeim_select(np.eye(3, 5))


def test_bad_indices(rng):
    Phi = random_orthonormal(rng, 10, 3)
    with pytest.raises(DeimError, match="distinct"):
        build_deim_operator(Phi, [1, 1, 2], Phi)
    with pytest.raises(DeimError):
        build_deim_operator(Phi, [1, 2], Phi)
    E = np.zeros((10, 2))
    E[0, 0] = E[1, 1] = 1.0
    with pytest.raises(DeimError, match="singular"):
        build_deim_operator(E, [5, 6], E)


def test_from_snapshots_recovers_low_rank_space(rng):
    basis = random_orthonormal(rng, 60, 5)
    S = basis @ rng.standard_normal((5, 40))
    V = random_orthonormal(rng, 60, 2)
    with pytest.warns(UserWarning):
        op, sigma = deim_from_snapshots(S, V, n=8)
    assert op.m == 5
    y = basis @ rng.standard_normal(5)
    np.testing.assert_allclose(op.interpolate(y), y, atol=1e-10)


def test_compute_deim_tolerance():
    S = np.diag([1.0, 1e-3, 1e-6, 1e-9])
    Phi, sigma = compute_deim(S, tol=1e-5)
    assert Phi.shape == (4, 2)
