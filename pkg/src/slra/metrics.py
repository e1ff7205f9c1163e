"""Evaluation helpers: planted spectra, approximation ratios, subspace angles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ._rng import as_rng
from .exceptions import InvalidArgumentError
from .linalg import check_matrix, gaussian_matrix, norm_from_values, singular_values

ABSOLUTE_TOL = 1e-12


@dataclass
class SpectrumSpec:
    """Singular values of a planted test matrix.

    ``kind`` is one of ``"flat"``, ``"power_law"``, ``"gapped"`` or
    ``"explicit"``.  ``seed=None`` plants the spectrum on the diagonal;
    otherwise both singular bases are Haar-like rotations drawn from the seed.
    """

    kind: str
    n: int
    exponent: float = 1.0
    head_values: Sequence[float] = ()
    tail_value: float = 1.0
    values: Sequence[float] = ()
    seed: int | None = 0
    m: int | None = None

    def singular_values(self) -> np.ndarray:
        kind = self.kind.lower()
        if kind == "flat":
            s = np.ones(self.n)
        elif kind == "power_law":
            s = np.arange(1, self.n + 1, dtype=float) ** (-float(self.exponent))
        elif kind == "gapped":
            head = np.asarray(self.head_values, dtype=float)
            if head.size > self.n:
                raise InvalidArgumentError("more head values than n")
            s = np.concatenate([head, np.full(self.n - head.size, float(self.tail_value))])
        elif kind == "explicit":
            s = np.asarray(self.values, dtype=float)
            if s.size != self.n:
                raise InvalidArgumentError("explicit values must have length n")
        else:
            raise InvalidArgumentError(f"unknown spectrum kind {self.kind!r}")
        if np.any(s <= 0) or not np.all(np.isfinite(s)):
            raise InvalidArgumentError("singular values must be positive and finite")
        return np.sort(s)[::-1]


def random_orthonormal(rows: int, cols: int, rng) -> np.ndarray:
    """QR of a Gaussian with signs fixed so the result is Haar distributed."""
    Q, R = np.linalg.qr(gaussian_matrix(rows, cols, rng))
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def planted_matrix(spec: SpectrumSpec) -> np.ndarray:
    """``U diag(sigma) V^T`` with the spectrum given by ``spec``."""
    s = spec.singular_values()
    n = spec.n
    m = spec.m or n
    if m < n:
        raise InvalidArgumentError("planted matrices need m >= n")
    if spec.seed is None:
        A = np.zeros((m, n))
        A[np.arange(n), np.arange(n)] = s
        return A
    rng = as_rng(spec.seed)
    U = random_orthonormal(m, n, rng.spawn(0))
    V = random_orthonormal(n, n, rng.spawn(1))
    return (U * s) @ V.T


class Ratio(NamedTuple):
    """Approximation ratio; ``absolute`` marks the exact-low-rank fallback
    where ``value`` is the absolute error instead of a ratio."""

    value: float
    absolute: bool


def optimal_error(A, k: int, p) -> float:
    """``||A - A_k||_p`` from the full spectrum."""
    s = singular_values(A)
    return norm_from_values(s[k:], p)


def check_orthonormal(W, tol=1e-6) -> np.ndarray:
    W = check_matrix(W, "W")
    if np.linalg.norm(W.T @ W - np.eye(W.shape[1])) > tol:
        raise InvalidArgumentError("W does not have orthonormal columns")
    return W


def approximation_ratio(A, W, p, k: int | None = None) -> Ratio:
    """``||A (I - W W^T)||_p / ||A - A_k||_p`` with ``k = W.shape[1]``.

    Falls back to the absolute error (flagged) when the optimum is at most
    ``1e-12 ||A||_F``.
    """
    A = check_matrix(A, "A")
    W = check_orthonormal(W)
    if W.shape[0] != A.shape[1]:
        raise InvalidArgumentError("W must have as many rows as A has columns")
    k = W.shape[1] if k is None else k
    s = singular_values(A)
    best = norm_from_values(s[k:], p)
    achieved = norm_from_values(singular_values(A - (A @ W) @ W.T), p)
    if best <= ABSOLUTE_TOL * np.linalg.norm(A):
        return Ratio(achieved, True)
    return Ratio(achieved / best, False)


def principal_angles(W1, W2) -> np.ndarray:
    """Principal angles (radians, ascending) between two column spans.

    Small angles come from the sines of ``(I - W1 W1^T) W2`` and large ones
    from the cosines of ``W1^T W2``, which keeps both ends accurate.
    """
    W1 = check_orthonormal(W1)
    W2 = check_orthonormal(W2)
    if W1.shape[0] != W2.shape[0]:
        raise InvalidArgumentError("subspaces live in different ambient dimensions")
    if W2.shape[1] > W1.shape[1]:
        W1, W2 = W2, W1
    cosines = np.clip(np.linalg.svd(W1.T @ W2, compute_uv=False), 0.0, 1.0)
    residual = W2 - W1 @ (W1.T @ W2)
    sines = np.clip(np.sort(np.linalg.svd(residual, compute_uv=False)), 0.0, 1.0)
    small = cosines**2 >= 0.5
    return np.where(small, np.arcsin(sines), np.arccos(cosines))
