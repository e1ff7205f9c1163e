import math

import numpy as np
import pytest

from slra import ContractViolationError, InvalidArgumentError, NumericFailureError, modified_lazysvd, original_lazysvd_baseline
from slra._rng import SeededRng
from slra.lazysvd import (
    AppxPcaConfig, DeflationState, MatvecOracle, appx_pca, deflated_matvec, default_eps_pca,
    lanczos, matvec_budget,
)
from slra.linalg import orthonormalize, schatten_norm, svd
from slra.metrics import principal_angles


def _diag_oracle(vals):
    vals = np.asarray(vals, dtype=float)
    return MatvecOracle(len(vals), lambda x: vals * x)


def _residual(A, V, p):
    W = orthonormalize(V)
    return schatten_norm(A - (A @ W) @ W.T, p)


def test_appx_pca_geometric_spectrum():
    d, eta = 32, 0.1
    M = _diag_oracle(0.5 ** np.arange(d))
    cfg = AppxPcaConfig(0.4, 1e-4, eta)
    hits = 0
    for seed in range(50):
        M.calls = 0
        w = appx_pca(M, None, cfg, SeededRng(seed))
        assert abs(np.linalg.norm(w) - 1) <= 1e-8
        assert M.calls <= cfg.lanczos_degree(d)
        hits += w[0] ** 2 >= 1 - 1e-4
    assert hits >= 50 * (1 - eta)


def test_appx_pca_identity():
    w = appx_pca(_diag_oracle(np.ones(10)), None, AppxPcaConfig(0.3, 1e-3, 0.1), SeededRng(0))
    assert abs(np.linalg.norm(w) - 1) <= 1e-8


def test_appx_pca_rank_one():
    x = SeededRng(1).normal(20)
    M = MatvecOracle(20, lambda v: x * (x @ v))
    w, info = appx_pca(M, None, AppxPcaConfig(0.3, 1e-6, 0.1), SeededRng(2), return_info=True)
    assert (w @ x) ** 2 / (x @ x) >= 1 - 1e-6
    assert info["breakdown"]


def test_appx_pca_non_finite_oracle():
    M = MatvecOracle(5, lambda v: np.full(5, np.nan))
    with pytest.raises(NumericFailureError):
        appx_pca(M, None, AppxPcaConfig(0.3, 1e-3, 0.1), SeededRng(0))


def test_appx_pca_config_validation():
    with pytest.raises(InvalidArgumentError):
        AppxPcaConfig(0.0, 1e-3, 0.1)
    with pytest.raises(InvalidArgumentError):
        AppxPcaConfig(0.1, 1e-3, 1.0)
    cfg = AppxPcaConfig(0.1, 1e-4, 0.1)
    q = math.ceil(10 * math.log(100 / 1e-5))
    assert cfg.power(100) == q
    assert cfg.gamma(100) == pytest.approx((1e-5 / (100 * q)) ** 2, rel=1e-12)
    assert cfg.lanczos_degree(100) == min(100, math.ceil(math.sqrt(2 * q * math.log(1 / cfg.gamma(100)))))


def test_lanczos_basis_orthonormal():
    rng = SeededRng(3)
    B = rng.normal((30, 30))
    M = MatvecOracle(30, lambda x: B.T @ (B @ x))
    run = lanczos(M, rng.normal(30), 15)
    Q = run.basis
    assert np.linalg.norm(Q.T @ Q - np.eye(Q.shape[1])) <= 1e-12


def test_deflated_matvec_no_deflation():
    A = SeededRng(4).normal((12, 8))
    x = SeededRng(5).normal(8)
    y = deflated_matvec(A, DeflationState.empty(8), x)
    np.testing.assert_allclose(y, A.T @ (A @ x), rtol=1e-13, atol=1e-13 * np.linalg.norm(A) ** 2)


def test_deflated_matvec_top_vector():
    A = SeededRng(6).normal((12, 8))
    v1 = svd(A).Vt[0]
    state = DeflationState(V=v1[:, None], s=1)
    x = SeededRng(7).normal(8)
    scale = np.linalg.norm(A, 2) ** 2 * np.linalg.norm(x)
    assert abs(v1 @ deflated_matvec(A, state, x)) <= 1e-10 * scale
    assert np.linalg.norm(deflated_matvec(A, state, 3 * v1)) <= 1e-10 * np.linalg.norm(A, 2) ** 2 * 3


def test_deflated_matvec_guards():
    state = DeflationState(V=np.eye(4)[:, :1], s=1, kappa_estimate=9.0)
    with pytest.raises(ContractViolationError):
        deflated_matvec(np.eye(4), state, np.ones(4))
    with pytest.raises(InvalidArgumentError):
        deflated_matvec(np.eye(4), DeflationState.empty(4), np.ones(3))


@pytest.mark.parametrize("solver", [modified_lazysvd, original_lazysvd_baseline])
def test_planted_diagonal(solver):
    vals = np.concatenate([[4.0, 3.0, 2.0, 1.0], np.full(60, 0.1)])
    A = np.diag(vals)
    eta = 0.1
    hits = 0
    for seed in range(20):
        state = solver(A, 3, 0.1, eta, seed)
        ok = state.kappa_estimate <= 4
        for p in (2, 4, math.inf):
            ok &= _residual(A, state.V, p) <= 1.2 * schatten_norm(np.diag(vals[3:]), p)
        hits += ok
    assert hits >= 20 * (1 - eta)


def test_exact_low_rank_recovery():
    rng = SeededRng(8)
    A = rng.normal((40, 3)) @ rng.normal((3, 30))
    state = modified_lazysvd(A, 3, 0.1, 0.1, 0)
    W = orthonormalize(state.V)
    assert np.linalg.norm(A - (A @ W) @ W.T) <= 1e-6 * np.linalg.norm(A)


def test_single_step_equals_one_appx_pca():
    A = SeededRng(9).normal((30, 20))
    state = modified_lazysvd(A, 1, 0.2, 0.1, 4, eps_pca=1e-6)
    w = appx_pca(MatvecOracle.gram(A), None, AppxPcaConfig(0.2, 1e-6, 0.1), SeededRng(4).spawn(1))
    np.testing.assert_array_equal(state.V[:, 0], w)


def test_baseline_k1_matches_modified():
    A = SeededRng(10).normal((30, 20))
    a = modified_lazysvd(A, 1, 0.1, 0.1, 2, eps_pca=1e-6)
    b = original_lazysvd_baseline(A, 1, 0.2, 0.1, 2, eps_pca=1e-6)
    np.testing.assert_allclose(a.V, b.V, atol=1e-14)


def test_variants_agree_on_well_conditioned_input():
    rng = SeededRng(11)
    U = np.linalg.qr(rng.normal((80, 80)))[0]
    V = np.linalg.qr(rng.normal((60, 60)))[0]
    s = np.concatenate([[10, 8, 6, 4], np.linspace(1, 0.5, 56)])
    A = (U[:, :60] * s) @ V.T
    a = modified_lazysvd(A, 4, 0.1, 0.1, 0)
    b = original_lazysvd_baseline(A, 4, 0.1, 0.1, 0)
    ang = principal_angles(orthonormalize(a.V), orthonormalize(b.V))
    assert ang.max() <= 1e-6


def test_step_diagnostics():
    vals = np.concatenate([[8.0, 6.0, 4.0, 2.0], np.linspace(1, 0.2, 60)])
    A = np.diag(vals)
    eps = 0.1
    state = modified_lazysvd(A, 4, eps, 0.1, 3)
    assert state.s == 4 and state.invariants_hold()
    for s, row in enumerate(state.history, 1):
        assert row["leakage"] <= state.eps_pca
        assert row["recursion_ok"]
        sig2 = vals[s - 1] ** 2
        assert (1 - 2 * eps) * sig2 <= row["rayleigh"] <= sig2 / (1 - 2 * eps)
    assert state.matvecs <= matvec_budget(64, 4, eps, state.eps_pca, 0.1)


def test_default_eps_pca():
    assert default_eps_pca(0.1, 2, 10, 1.0) == pytest.approx(0.001, rel=1e-12)
    assert default_eps_pca(0.5, 2, 10, 1.0) == 1 / 256
    assert default_eps_pca(0.1, 1, 100, 0.1) == pytest.approx(1e-6)
    assert default_eps_pca(0.1, 1, 1, 0.0) == pytest.approx(1e-18)


def test_oracle_path_and_non_finite_oracle():
    vals = np.concatenate([[5.0, 3.0], np.full(20, 0.5)])
    state = modified_lazysvd(None, 2, 0.1, oracle=_diag_oracle(vals**2))
    assert principal_angles(orthonormalize(state.V), np.eye(22)[:, :2]).max() <= 1e-3
    bad = MatvecOracle(5, lambda x: np.full(5, np.inf))
    with pytest.raises(NumericFailureError):
        modified_lazysvd(None, 1, 0.1, oracle=bad)


def test_argument_validation():
    A = np.eye(5)
    for args in ((0, 0.1, 0.1), (6, 0.1, 0.1), (1, 1.0, 0.1), (1, 0.1, 0.0)):
        with pytest.raises(InvalidArgumentError):
            modified_lazysvd(A, *args)
