"""Feedthrough decoupling: SVD factors, transform products and splits."""

import numpy as np
import pytest

import lpvobs as lo
from tests.conftest import make_rank_deficient_model


def test_benchmark_rank_and_singular_value(bench_dm):
    # H has proportional rows: trace(H^T H) = 26.05, det = 0, so the single
    # singular value is sqrt(26.05).
    assert bench_dm.p_H == 1
    np.testing.assert_allclose(np.diag(bench_dm.Sigma), [np.sqrt(26.05)], rtol=1e-12)


def test_h_reconstruction(bench_dm):
    H = bench_dm.U1 @ bench_dm.Sigma @ bench_dm.V1.T
    err = np.linalg.norm(H - bench_dm.model.H) / np.linalg.norm(bench_dm.model.H)
    assert err < 1e-10


def test_orthogonality(bench_dm):
    U = np.hstack([bench_dm.U1, bench_dm.U2])
    V = np.hstack([bench_dm.V1, bench_dm.V2])
    np.testing.assert_allclose(U.T @ U, np.eye(2), atol=1e-10)
    np.testing.assert_allclose(V.T @ V, np.eye(2), atol=1e-10)


def test_gain_constant_identities(bench_dm):
    np.testing.assert_allclose(bench_dm.M1 @ bench_dm.Sigma, np.eye(1), atol=1e-12)
    C2G2 = bench_dm.C2 @ bench_dm.G2
    np.testing.assert_allclose(bench_dm.M2 @ C2G2, np.eye(1), atol=1e-12)


def test_pseudoinverse_axioms(bench_dm):
    C2G2 = bench_dm.C2 @ bench_dm.G2
    M2 = bench_dm.M2
    np.testing.assert_allclose(C2G2 @ M2 @ C2G2, C2G2, atol=1e-12)
    np.testing.assert_allclose(M2 @ C2G2 @ M2, M2, atol=1e-12)


def test_sigma_positive_nonincreasing(bench_dm):
    s = np.diag(bench_dm.Sigma)
    assert np.all(s > 0)
    assert np.all(np.diff(s) <= 0)


def test_sign_convention_first_nonzero_positive(bench_dm):
    for col in bench_dm.U1.T:
        nz = col[np.abs(col) > 0]
        assert nz[0] > 0
    for col in bench_dm.U2.T:
        nz = col[np.abs(col) > 0]
        assert nz[0] > 0


def test_decouple_deterministic(bench_model):
    d1 = lo.decouple(bench_model)
    d2 = lo.decouple(bench_model)
    np.testing.assert_array_equal(d1.U1, d2.U1)
    np.testing.assert_array_equal(d1.V2, d2.V2)
    np.testing.assert_array_equal(d1.M2, d2.M2)


def test_no_feedthrough_case():
    model = lo.LpvModel(
        A=([[0.5, 0.0], [0.0, 0.5]],), B=([[1.0], [0.0]],),
        C=[[1.0, 0.0], [0.0, 1.0]], D=([[0.0], [0.0]],),
        G=[[1.0], [0.5]], H=[[0.0], [0.0]],
        eta_w=0.0, eta_v=0.0, x0_hat=[0, 0], delta0_x=0.0,
    )
    dm = lo.decouple(model)
    assert dm.p_H == 0
    assert dm.Sigma.shape == (0, 0)
    assert dm.M1.shape == (0, 0)
    np.testing.assert_array_equal(dm.U2, np.eye(2))
    np.testing.assert_array_equal(dm.V2, np.eye(1))
    y = np.array([0.3, -0.7])
    z1, z2 = lo.split_output(dm, y)
    assert z1.shape == (0,)
    np.testing.assert_array_equal(z2, y)
    d = np.array([1.7])
    d1, d2 = lo.split_unknown_input(dm, d)
    assert d1.shape == (0,)
    np.testing.assert_array_equal(d2, d)


def test_full_feedthrough_case():
    model = lo.LpvModel(
        A=([[0.5, 0.0], [0.0, 0.5]],), B=([[1.0], [0.0]],),
        C=[[1.0, 0.0], [0.0, 1.0]], D=([[0.0], [0.0]],),
        G=[[0.1, 0.0], [0.0, 0.1]], H=[[1.0, 0.0], [0.0, 2.0]],
        eta_w=0.0, eta_v=0.0, x0_hat=[0, 0], delta0_x=0.0,
    )
    dm = lo.decouple(model)
    assert dm.p_H == 2
    assert dm.U2.shape == (2, 0)
    assert dm.V2.shape == (2, 0)
    y = np.array([1.0, 2.0])
    z1, z2 = lo.split_output(dm, y)
    assert z2.shape == (0,)
    assert np.linalg.norm(z1) == pytest.approx(np.linalg.norm(y), rel=1e-12)


def test_split_output_zero_and_norm_preservation(bench_dm):
    z1, z2 = lo.split_output(bench_dm, np.zeros(2))
    assert np.all(z1 == 0) and np.all(z2 == 0)
    rng = np.random.default_rng(5)
    for _ in range(25):
        y = rng.normal(size=2)
        z1, z2 = lo.split_output(bench_dm, y)
        stacked = np.concatenate([z1, z2])
        assert np.linalg.norm(stacked) == pytest.approx(np.linalg.norm(y), abs=1e-12)


def test_split_output_unit_vector(bench_dm):
    y = np.array([1.0, 0.0])
    z1, z2 = lo.split_output(bench_dm, y)
    np.testing.assert_allclose(z1, bench_dm.U1.T @ y, atol=1e-15)
    np.testing.assert_allclose(z2, bench_dm.U2.T @ y, atol=1e-15)
    assert z1[0] ** 2 + z2[0] ** 2 == pytest.approx(1.0, abs=1e-12)


def test_split_output_dimension_check(bench_dm):
    with pytest.raises(ValueError, match="length 2"):
        lo.split_output(bench_dm, np.zeros(3))


def test_unknown_input_roundtrip(bench_dm):
    rng = np.random.default_rng(6)
    for _ in range(25):
        d = rng.normal(size=2)
        d1, d2 = lo.split_unknown_input(bench_dm, d)
        back = lo.recombine_unknown_input(bench_dm, d1, d2)
        np.testing.assert_allclose(back, d, atol=1e-12)
    d1, d2 = lo.split_unknown_input(bench_dm, np.zeros(2))
    np.testing.assert_array_equal(lo.recombine_unknown_input(bench_dm, d1, d2), np.zeros(2))


def test_feedthrough_identity_H_d(bench_dm):
    # H d = U1 Sigma d1 for every d, by the factorization.
    rng = np.random.default_rng(7)
    for _ in range(10):
        d = rng.normal(size=2)
        d1, _ = lo.split_unknown_input(bench_dm, d)
        np.testing.assert_allclose(
            bench_dm.model.H @ d, bench_dm.U1 @ bench_dm.Sigma @ d1, atol=1e-12
        )


def test_rank_deficient_c2g2_raises():
    model = make_rank_deficient_model()
    with pytest.raises(lo.BoundednessError, match=r"rank\(C2 G2\)"):
        lo.decouple(model)
    dm = lo.decouple(model, require_boundedness=False)
    assert dm.rank_C2G2 == 0
    assert dm.model.p - dm.p_H == 1


def test_rank_margin_surfaced(bench_dm):
    kept, dropped = bench_dm.rank_margin
    assert kept == pytest.approx(np.sqrt(26.05), rel=1e-12)
    assert dropped < 1e-12 * kept
