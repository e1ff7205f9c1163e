"""Dense linear-algebra primitives used by every algorithm in the package.

Small SVDs and Householder QR factorizations are delegated to LAPACK through
numpy/scipy.  The randomized pieces (Gaussian test matrices, SRHT sketches)
draw from :class:`slra.SeededRng` so results are reproducible from a seed.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
import logging

import numpy as np
import scipy.linalg
from threadpoolctl import threadpool_limits

from ._rng import as_rng
from .exceptions import IllConditionedBasisError, InvalidArgumentError

logger = logging.getLogger(__name__)

RANK_TOL = 1e-12
MAX_BASIS_CONDITION = 1e8


@contextmanager
def deterministic():
    """Force single-threaded BLAS/LAPACK reductions inside the block."""
    with threadpool_limits(limits=1):
        yield


def check_matrix(M, name="matrix", allow_empty=False) -> np.ndarray:
    """Validate a 2-D finite real matrix and return it as float64."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise InvalidArgumentError(f"{name} must be 2-dimensional, got ndim={M.ndim}")
    if not allow_empty and (M.shape[0] < 1 or M.shape[1] < 1):
        raise InvalidArgumentError(f"{name} must have at least one row and column")
    if not np.all(np.isfinite(M)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return M


def gaussian_matrix(rows: int, cols: int, rng) -> np.ndarray:
    """``rows x cols`` matrix of i.i.d. standard normals from a seeded stream."""
    if rows < 1 or cols < 1:
        raise InvalidArgumentError(f"dimensions must be positive, got ({rows}, {cols})")
    return as_rng(rng).normal((rows, cols))


def orthonormalize(M, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis for the column span of ``M`` (Householder QR).

    Uses column-pivoted Householder QR.  A pivoted column whose residual norm
    after projecting out the previous ones is ``<= tol`` times its original
    norm is treated as dependent; it and everything after it are dropped.
    The number of retained columns is ``Q.shape[1]``.
    """
    M = check_matrix(M, "M")
    norms = np.linalg.norm(M, axis=0)
    Q, R, piv = scipy.linalg.qr(M, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    keep = 0
    for j, r in enumerate(diag):
        if r <= tol * norms[piv[j]] or norms[piv[j]] == 0.0:
            break
        keep += 1
    if keep < M.shape[1]:
        logger.debug("orthonormalize dropped %d dependent columns", M.shape[1] - keep)
    signs = np.where(np.diag(R)[:keep] < 0, -1.0, 1.0)
    return Q[:, :keep] * signs


@dataclass
class SvdResult:
    """Thin SVD ``A = U diag(singular_values) Vt``."""

    U: np.ndarray
    singular_values: np.ndarray
    Vt: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.singular_values) @ self.Vt


def svd(M) -> SvdResult:
    """Thin SVD via LAPACK's divide-and-conquer Golub-Kahan driver."""
    M = check_matrix(M, "M")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return SvdResult(U, s, Vt)


def singular_values(M) -> np.ndarray:
    M = check_matrix(M, "M")
    return np.linalg.svd(M, compute_uv=False)


def _check_p(p):
    if not (p == np.inf or (np.isfinite(p) and p >= 1)):
        raise InvalidArgumentError(f"Schatten exponent must be >= 1 or inf, got {p}")


def norm_from_values(values, p) -> float:
    """``(sum values**p)**(1/p)`` computed with scaling to avoid overflow."""
    _check_p(p)
    values = np.abs(np.asarray(values, dtype=np.float64))
    if values.size == 0:
        return 0.0
    top = values.max()
    if top == 0.0:
        return 0.0
    if p == np.inf:
        return float(top)
    return float(top * np.sum((values / top) ** p) ** (1.0 / p))


def schatten_norm(M, p) -> float:
    """Schatten-p norm; ``p = np.inf`` gives the operator norm."""
    _check_p(p)
    return norm_from_values(singular_values(M), p)


def truncated_norm(M, p, r: int) -> float:
    """Schatten-p sum restricted to the ``r`` largest singular values."""
    _check_p(p)
    M = check_matrix(M, "M")
    if not 1 <= r <= min(M.shape):
        raise InvalidArgumentError(f"r must lie in [1, {min(M.shape)}], got {r}")
    return norm_from_values(singular_values(M)[:r], p)


def fwht(X) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform along axis 0.

    The leading dimension must be a power of two.  Runs in
    ``O(n log n)`` per column.
    """
    X = np.array(X, dtype=np.float64)
    squeeze = X.ndim == 1
    if squeeze:
        X = X[:, None]
    n = X.shape[0]
    if n & (n - 1):
        raise InvalidArgumentError(f"length {n} is not a power of two")
    cols = X.shape[1]
    h = 1
    while h < n:
        view = X.reshape(n // (2 * h), 2, h, cols)
        a = view[:, 0].copy()
        view[:, 0] += view[:, 1]
        view[:, 1] = a - view[:, 1]
        h *= 2
    return X[:, 0] if squeeze else X


def next_power_of_two(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def srht_sketch(A, s: int, rng) -> np.ndarray:
    """Apply a subsampled randomized Hadamard transform from the left.

    Returns ``S @ A`` with ``S = sqrt(n_pad / s) * P H D``: random signs ``D``,
    the orthonormal Hadamard matrix ``H`` on the zero-padded power-of-two
    dimension ``n_pad``, and a uniform sample ``P`` of ``s`` rows.
    """
    A = check_matrix(A, "A")
    rows = A.shape[0]
    if not 1 <= s <= rows:
        raise InvalidArgumentError(f"sketch size must lie in [1, {rows}], got {s}")
    rng = as_rng(rng)
    n_pad = next_power_of_two(rows)
    padded = np.zeros((n_pad, A.shape[1]))
    padded[:rows] = A * rng.signs(rows)[:, None]
    mixed = fwht(padded)
    if s == rows and rows == n_pad:
        picked = np.arange(n_pad)
    else:
        picked = rng.sample_without_replacement(n_pad, s)
    # sqrt(n_pad/s) * (1/sqrt(n_pad)) folds into 1/sqrt(s)
    return mixed[picked] / np.sqrt(s)


def srht_sketch_columns(A, r: int, rng) -> np.ndarray:
    """``A @ T`` for an SRHT ``T`` with ``r`` columns (right-hand sketch)."""
    return srht_sketch(np.asarray(A).T, r, rng).T


class ComplementProjector:
    """Applies ``I - Proj_colspace(B)`` by Householder least squares.

    ``B`` is factored once; each call solves ``min_z ||B z - x||`` and
    returns the residual ``x - B z``.  ``B`` is never orthonormalized.
    """

    def __init__(self, B, max_condition: float = MAX_BASIS_CONDITION):
        B = np.asarray(B, dtype=np.float64)
        if B.ndim != 2:
            raise InvalidArgumentError("B must be 2-dimensional")
        if not np.all(np.isfinite(B)):
            raise InvalidArgumentError("B contains non-finite entries")
        self.B = B
        if B.shape[1] == 0:
            self.Q = self.R = None
            self.condition = 1.0
            return
        if B.shape[1] > B.shape[0]:
            raise InvalidArgumentError("B must have at least as many rows as columns")
        self.Q, self.R = scipy.linalg.qr(B, mode="economic")
        rs = np.linalg.svd(self.R, compute_uv=False)
        self.condition = float(rs[0] / rs[-1]) if rs[-1] > 0 else np.inf
        if self.condition > max_condition:
            raise IllConditionedBasisError(
                f"basis condition number {self.condition:.3g} exceeds {max_condition:.3g}"
            )

    def coefficients(self, x) -> np.ndarray:
        return scipy.linalg.solve_triangular(self.R, self.Q.T @ x)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.B.shape[0]:
            raise InvalidArgumentError("x length must match the rows of B")
        if self.R is None:
            return x.copy()
        return x - self.B @ self.coefficients(x)


def project_complement(B, x) -> np.ndarray:
    """``x - B argmin_z ||B z - x||``, i.e. ``(I - Proj_colspace(B)) x``."""
    return ComplementProjector(B)(x)
