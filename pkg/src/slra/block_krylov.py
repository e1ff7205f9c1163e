"""Randomized Block Krylov iteration for top singular subspaces."""

from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np

from ._rng import as_rng
from .exceptions import InvalidArgumentError
from .linalg import check_matrix, gaussian_matrix, orthonormalize, svd

logger = logging.getLogger(__name__)

# Columns of a new Krylov block whose norm drops below this fraction of
# their pre-projection norm are treated as already spanned.
KRYLOV_DROP_TOL = 1e-10

SATURATION_POLICIES = ("exact", "truncate")


@dataclass
class KrylovConfig:
    rank_k: int
    block_size_b: int
    iterations_q: int
    seed: int = 0
    saturation: str = "exact"

    def __post_init__(self):
        if self.rank_k < 1:
            raise InvalidArgumentError(f"rank_k must be >= 1, got {self.rank_k}")
        if self.block_size_b < self.rank_k:
            raise InvalidArgumentError("block_size_b must be >= rank_k")
        if self.iterations_q < 1:
            raise InvalidArgumentError("iterations_q must be >= 1")
        if self.saturation not in SATURATION_POLICIES:
            raise InvalidArgumentError(f"saturation must be one of {SATURATION_POLICIES}")

    def saturates(self, shape) -> bool:
        """True when ``(q + 1) * b`` exceeds the dimension of the range of A."""
        return (self.iterations_q + 1) * self.block_size_b > min(shape)


@dataclass
class KrylovResult:
    """Output of :func:`block_krylov`.

    ``Z`` holds the top-``k`` Ritz vectors, ``gram_M`` the projected matrix
    ``Q^T A A^T Q`` and ``sigma_estimates`` the Ritz singular values (all of
    them, not only the top ``k``).
    """

    Z: np.ndarray
    gram_M: np.ndarray
    sigma_estimates: np.ndarray
    Q: np.ndarray
    provenance: str = "krylov"
    iterations_run: int = 0
    products: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def exact_fallback(self) -> bool:
        return self.provenance == "exact_fallback"


def complete_basis(Q, k: int, rng) -> np.ndarray:
    """Extend orthonormal columns ``Q`` to ``k`` columns with random directions."""
    Q = np.asarray(Q, dtype=np.float64)
    rng = as_rng(rng)
    while Q.shape[1] < k:
        G = gaussian_matrix(Q.shape[0], k - Q.shape[1], rng)
        for _ in range(2):
            G -= Q @ (Q.T @ G)
        Q = np.hstack([Q, orthonormalize(G)])
    return Q[:, :k]


def _extend_basis(Q, Y):
    """Block classical Gram-Schmidt with one re-orthogonalization pass."""
    ref = np.linalg.norm(Y, axis=0)
    if Q.shape[1]:
        for _ in range(2):
            Y = Y - Q @ (Q.T @ Y)
    keep = np.linalg.norm(Y, axis=0) > KRYLOV_DROP_TOL * np.maximum(ref, np.finfo(float).tiny)
    Y = Y[:, keep]
    if Y.shape[1] == 0:
        return Y
    block = orthonormalize(Y)
    if Q.shape[1]:
        block = block - Q @ (Q.T @ block)
        block = orthonormalize(block) if block.shape[1] else block
    return block


def _exact(A, k, rng, iterations):
    res = svd(A)
    Z = complete_basis(res.U[:, :k], k, rng)
    s = res.singular_values
    return KrylovResult(
        Z=Z,
        gram_M=np.diag(s**2),
        sigma_estimates=s.copy(),
        Q=res.U,
        provenance="exact_fallback",
        iterations_run=iterations,
        products=0,
    )


def block_krylov(A, cfg: KrylovConfig) -> KrylovResult:
    """Top-``k`` Ritz vectors of ``A A^T`` from the block Krylov space.

    Builds ``[A P, (A A^T) A P, ..., (A A^T)^q A P]`` for a Gaussian block
    ``P`` with ``b`` columns, orthonormalizes it into ``Q``, forms
    ``M = Q^T A A^T Q`` and returns ``Z = Q U_k`` for the top-``k`` singular
    vectors ``U_k`` of ``M``.

    When ``(q + 1) b`` exceeds ``min(A.shape)`` the Krylov space already
    covers the whole range.  With ``saturation="exact"`` the exact SVD is
    used instead and the result is flagged ``provenance="exact_fallback"``;
    with ``"truncate"`` the iteration simply stops once no new directions
    appear.
    """
    A = check_matrix(A, "A")
    m, n = A.shape
    k = cfg.rank_k
    if k > min(m, n):
        raise InvalidArgumentError(f"rank_k={k} exceeds min(A.shape)={min(m, n)}")
    rng = as_rng(cfg.seed)
    if cfg.saturation == "exact" and cfg.saturates(A.shape):
        logger.debug("Krylov basis saturates (q+1)b=%d > %d; using exact SVD",
                     (cfg.iterations_q + 1) * cfg.block_size_b, min(m, n))
        return _exact(A, k, rng, cfg.iterations_q)

    Pi = gaussian_matrix(n, cfg.block_size_b, rng)
    Q = np.zeros((m, 0))
    block = _extend_basis(Q, A @ Pi)
    Q = block
    products = 1
    iterations = 0
    for _ in range(cfg.iterations_q):
        if block.shape[1] == 0 or Q.shape[1] >= min(m, n):
            break
        Y = A @ (A.T @ block)
        products += 2
        block = _extend_basis(Q, Y)
        Q = np.hstack([Q, block])
        iterations += 1

    # Q^T A = U_bar diag(sigma_hat) V^T, so U_bar holds the eigenvectors of M.
    B = A.T @ Q
    products += 1
    gram = B.T @ B
    U_bar, sigma_hat, _ = np.linalg.svd(B.T, full_matrices=False)
    Z = Q @ U_bar[:, :k]
    if Z.shape[1] < k:
        Z = complete_basis(Z, k, rng.spawn(1))
    return KrylovResult(
        Z=Z,
        gram_M=gram,
        sigma_estimates=sigma_hat,
        Q=Q,
        provenance="krylov",
        iterations_run=iterations,
        products=products,
    )


def ritz_estimates(result: KrylovResult, indices) -> list:
    """Ritz singular-value estimates at 1-based ``indices``."""
    out = []
    size = len(result.sigma_estimates)
    for i in indices:
        if not 1 <= int(i) <= size:
            raise InvalidArgumentError(f"index {i} out of range [1, {size}]")
        out.append(float(result.sigma_estimates[int(i) - 1]))
    return out


def gap_dependent_iterations(n: int, epsilon: float, gap: float, constant: float = 4.0) -> int:
    """``ceil(C log(n / eps) / sqrt(min(1, gap)))`` iterations."""
    if gap <= 0:
        raise InvalidArgumentError("gap must be positive")
    return int(np.ceil(constant * np.log(n / epsilon) / np.sqrt(min(1.0, gap))))
