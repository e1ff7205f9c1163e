import math

import numpy as np
import pytest

from slra import InvalidArgumentError, KrylovConfig, SpectrumSpec, block_krylov, planted_matrix
from slra.block_krylov import gap_dependent_iterations, ritz_estimates
from slra.linalg import orthonormalize, singular_values


def _diag(values, n):
    return np.diag(np.concatenate([values, np.ones(n - len(values))]))


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        KrylovConfig(3, 2, 1)
    with pytest.raises(InvalidArgumentError):
        KrylovConfig(1, 1, 0)
    with pytest.raises(InvalidArgumentError):
        KrylovConfig(1, 1, 1, saturation="other")
    assert KrylovConfig(2, 2, 10).saturates((20, 20))
    assert not KrylovConfig(2, 2, 10).saturates((64, 64))


def test_per_vector_guarantee_item_one():
    n, q = 64, 10
    A = _diag([10.0, 5.0], n)
    res = block_krylov(A, KrylovConfig(2, 2, q, seed=0))
    assert res.provenance == "krylov"
    delta = 1.0 * math.log(n) ** 2 / q**2
    energy = np.sum((A.T @ res.Z) ** 2, axis=0)
    assert energy[0] >= 100 - delta and energy[1] >= 25 - delta


def test_orthonormal_matrix_pins_ritz_values():
    Q = orthonormalize(np.random.default_rng(0).standard_normal((40, 40)))
    res = block_krylov(Q, KrylovConfig(3, 3, 4, seed=1))
    assert np.all(np.abs(res.sigma_estimates - 1) <= 1e-8)


def test_result_invariants():
    A = planted_matrix(SpectrumSpec(kind="power_law", n=80, seed=3))
    res = block_krylov(A, KrylovConfig(4, 6, 5, seed=2))
    k = 4
    assert np.linalg.norm(res.Z.T @ res.Z - np.eye(k)) <= 1e-10 * k
    s = res.sigma_estimates
    assert np.all(np.diff(s) <= 1e-12) and np.all(s >= 0)
    true = singular_values(A)
    assert np.all(s <= true[: len(s)] * (1 + 1e-8))
    # Z lies in the Krylov span
    assert np.linalg.norm(res.Z - res.Q @ (res.Q.T @ res.Z)) <= 1e-10
    np.testing.assert_allclose(np.linalg.eigvalsh(res.gram_M)[::-1][: len(s)], s**2, rtol=1e-8, atol=1e-12)


def test_saturation_falls_back_to_exact():
    A = _diag([4.0, 3.0, 2.0], 12)
    res = block_krylov(A, KrylovConfig(2, 4, 5, seed=0))
    assert res.exact_fallback and res.products == 0
    np.testing.assert_allclose(ritz_estimates(res, [1, 2, 3]), [4, 3, 2], atol=1e-8)


def test_truncate_mode_stops_when_basis_full():
    A = _diag([4.0, 3.0, 2.0], 12)
    res = block_krylov(A, KrylovConfig(2, 4, 5, seed=0, saturation="truncate"))
    assert res.provenance == "krylov" and res.Q.shape[1] <= 12
    np.testing.assert_allclose(ritz_estimates(res, [1, 2, 3]), [4, 3, 2], atol=1e-8)


def test_ritz_estimates_validation():
    res = block_krylov(_diag([2.0], 10), KrylovConfig(1, 1, 2, seed=0))
    assert ritz_estimates(res, []) == []
    with pytest.raises(InvalidArgumentError):
        ritz_estimates(res, [0])
    with pytest.raises(InvalidArgumentError):
        ritz_estimates(res, [len(res.sigma_estimates) + 1])


def test_ritz_accuracy_large_block():
    # Ritz estimates from the b'+k run are within 1/(10p) of the truth
    n, k, p = 256, 5, 2.0
    hits = 0
    for seed in range(50):
        A = planted_matrix(SpectrumSpec(kind="power_law", n=n, seed=seed))
        iters = math.ceil(math.sqrt(p) * math.log2(n / 0.25))
        res = block_krylov(A, KrylovConfig(13, 13, iters, seed=seed, saturation="truncate"))
        est = res.sigma_estimates[k - 1]
        hits += abs(est / singular_values(A)[k - 1] - 1) <= 1 / 20
    assert hits / 50 >= 0.99


def test_convergence_monotone_in_q():
    n, k = 128, 3
    A = _diag([6.0, 5.0, 4.0], n) @ np.diag(np.linspace(1, 0.5, n))
    s = singular_values(A)
    prev = -np.inf
    for q in (2, 4, 8, 16):
        res = block_krylov(A, KrylovConfig(k, k, q, seed=7))
        energy = np.sum((A.T @ res.Z) ** 2, axis=0)
        cur = float(np.min(energy - s[:k] ** 2 + s[k] ** 2))
        assert cur >= prev - 1e-10
        prev = cur


def test_gap_dependent_iterations():
    assert gap_dependent_iterations(128, 1e-6, 0.5) == math.ceil(4 * math.log(128 / 1e-6) / math.sqrt(0.5))
    assert gap_dependent_iterations(128, 1e-6, 4.0) == math.ceil(4 * math.log(128 / 1e-6))
    with pytest.raises(InvalidArgumentError):
        gap_dependent_iterations(10, 0.1, 0)


def _gap_instance(n, k, seed):
    vals = np.concatenate([[8.0, 6.0, 4.5, 3.0][:k], 2.0 / (1 + np.arange(n - k) / n)])
    return planted_matrix(SpectrumSpec(kind="explicit", n=n, values=vals, seed=seed))


def test_gap_dependent_bound_without_saturation():
    # at n=128 the prescribed q saturates the space; n=512 exercises the iteration itself
    n, k, eps = 512, 4, 1e-6
    q = gap_dependent_iterations(n, eps, 0.5)
    for seed in range(10):
        A = _gap_instance(n, k, seed)
        res = block_krylov(A, KrylovConfig(k, k, q, seed))
        assert res.provenance == "krylov"
        s = singular_values(A)
        sz = singular_values(res.Z.T @ A)
        assert np.all(sz[:k] ** 2 >= s[:k] ** 2 - eps * s[k] ** 2)


def test_rectangular_input():
    A = np.random.default_rng(1).standard_normal((30, 50))
    res = block_krylov(A, KrylovConfig(3, 3, 3, seed=0))
    assert res.Z.shape == (30, 3)


def test_rank_exceeding_dimension():
    with pytest.raises(InvalidArgumentError):
        block_krylov(np.ones((3, 3)), KrylovConfig(4, 4, 1))
