"""Sketch-and-solve Schatten-p low-rank approximation for ``p > 2``.

The left sketch ``S`` and right sketch ``T`` are both subsampled randomized
Hadamard transforms.  :func:`lw_lra` takes the top-``k`` left singular
vectors of ``S A T`` directly; :func:`combined_lra` replaces that dense SVD by
the dual-block Krylov solver applied to the truncated ``(p, r)``-norm problem
on ``S A`` (:func:`truncated_lra`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from ._rng import SeededRng
from .block_krylov import complete_basis
from .cost_model import CostModelParams
from .exceptions import InvalidArgumentError
from .linalg import check_matrix, orthonormalize, srht_sketch, srht_sketch_columns, svd
from .schatten import LowRankSolution, schatten_lra


@dataclass
class SketchConfig:
    p: float
    rank_k: int
    epsilon: float
    row_multiplier: float = 1.0
    seed: int = 0
    eta_constant: float = 1.0
    col_multiplier: float = 1.0

    def __post_init__(self):
        if not self.p > 2:
            raise InvalidArgumentError(f"the sketching pipeline needs p > 2, got {self.p}")
        if self.rank_k < 1:
            raise InvalidArgumentError("rank_k must be >= 1")
        if not 0 < self.epsilon < 1:
            raise InvalidArgumentError("epsilon must lie in (0, 1)")
        if self.row_multiplier <= 0 or self.col_multiplier <= 0 or self.eta_constant <= 0:
            raise InvalidArgumentError("multipliers must be positive")

    def eta1(self, n: int) -> float:
        """Additive slack ``c eps^(1+2/p) / (k^(2/p) n^(1-2/p))``."""
        p, k, eps = self.p, self.rank_k, self.epsilon
        return self.eta_constant * eps ** (1 + 2 / p) / (k ** (2 / p) * n ** (1 - 2 / p))

    def effective_rank(self, n: int) -> float:
        """``K = k + eps / eta1``."""
        return self.rank_k + self.epsilon / self.eta1(n)

    def sketch_rows(self, n: int) -> int:
        """``s = ceil(mult * eps^-2 * K * ln n)``."""
        return max(self.rank_k, int(math.ceil(
            self.row_multiplier * self.effective_rank(n) * math.log(max(n, 2)) / self.epsilon**2)))

    def embedding_cols(self, s: int) -> int:
        """``r = ceil(mult * eps^-2 * s * log2 s)``."""
        return max(s, int(math.ceil(
            self.col_multiplier * s * math.log2(max(s, 2)) / self.epsilon**2)))


@dataclass
class SketchResult:
    """Orthonormal ``n x k`` factor ``Z``; the projection is ``Z Z^T``."""

    Z: np.ndarray
    s: int
    r: int
    sketch_degenerate: bool
    embedding_degenerate: bool
    counters: dict = field(default_factory=dict)
    rowspace_rank: int = 0


def _left_sketch(A, s, rng):
    m = A.shape[0]
    if s >= m:
        return A, True
    return srht_sketch(A, s, rng), False


def _right_sketch(A, r, rng):
    n = A.shape[1]
    if r >= n:
        return A, True
    return srht_sketch_columns(A, r, rng), False


def _rowspace_basis(M, k, rng):
    Z = orthonormalize(M.T)
    rank = Z.shape[1]
    return complete_basis(Z, k, rng), rank


def lw_lra(A, cfg: SketchConfig) -> SketchResult:
    """Sketch ``S A T``, take its top-``k`` left singular vectors ``W`` and
    return an orthonormal basis of the row space of ``W^T S A``."""
    A = check_matrix(A, "A")
    m, n = A.shape
    if cfg.rank_k > min(m, n):
        raise InvalidArgumentError("rank_k exceeds the matrix dimensions")
    master = SeededRng(cfg.seed)
    s = cfg.sketch_rows(n)
    SA, s_degenerate = _left_sketch(A, s, master.spawn(1))
    r = cfg.embedding_cols(SA.shape[0])
    SAT, t_degenerate = _right_sketch(SA, r, master.spawn(2))
    W = svd(SAT).U[:, : cfg.rank_k]
    Z, rank = _rowspace_basis(W.T @ SA, cfg.rank_k, master.spawn(3))
    return SketchResult(
        Z=Z, s=SA.shape[0], r=SAT.shape[1], sketch_degenerate=s_degenerate,
        embedding_degenerate=t_degenerate, rowspace_rank=rank,
        counters={"sat_svd_calls": 1, "exact_fallbacks": 0},
    )


@dataclass
class TruncatedResult:
    Z: np.ndarray
    W_hat: np.ndarray
    sub_epsilon: float
    embedding_degenerate: bool
    solution: LowRankSolution
    rowspace_rank: int = 0


def truncated_lra(A, k: int, p: float, r: int, epsilon: float, seed: int = 0,
                  sub_epsilon: float | None = None, col_multiplier: float = 1.0,
                  iteration_multiplier: float = 1.0,
                  cost: CostModelParams = CostModelParams()) -> TruncatedResult:
    """Rank-``k`` projection for the truncated ``(p, r)``-norm problem.

    ``A`` is ``m x n`` with ``m <= n``.  An SRHT ``T`` with
    ``ceil(mult * eps^-2 * m * log2 n)`` columns embeds the row space of
    ``A``; the dual-block solver is run on ``T^T A^T`` at accuracy
    ``eps / (p m)`` (override with ``sub_epsilon``), giving ``W_hat`` in
    ``R^m``.  The returned ``Z`` spans the row space of ``W_hat^T A``.
    """
    A = check_matrix(A, "A")
    m, n = A.shape
    if m > n:
        raise InvalidArgumentError(f"truncated_lra needs m <= n, got {A.shape}")
    if not 1 <= k <= m:
        raise InvalidArgumentError(f"k must lie in [1, {m}]")
    if not 1 <= r <= n:
        raise InvalidArgumentError(f"r must lie in [1, {n}]")
    if not 0 < epsilon < 1:
        raise InvalidArgumentError("epsilon must lie in (0, 1)")
    master = SeededRng(seed)
    t = int(math.ceil(col_multiplier * m * math.log2(max(n, 2)) / epsilon**2))
    AT, t_degenerate = _right_sketch(A, max(t, m), master.spawn(1))
    eps_sub = epsilon / (p * m) if sub_epsilon is None else sub_epsilon
    sol = schatten_lra(AT.T, k, p, eps_sub, seed=master.spawn(2).seed, cost=cost,
                       iteration_multiplier=iteration_multiplier)
    W_hat = sol.W
    Z, rank = _rowspace_basis(W_hat.T @ A, k, master.spawn(3))
    return TruncatedResult(Z=Z, W_hat=W_hat, sub_epsilon=eps_sub,
                           embedding_degenerate=t_degenerate, solution=sol, rowspace_rank=rank)


def combined_lra(A, cfg: SketchConfig, sub_epsilon: float | None = None,
                 iteration_multiplier: float = 1.0,
                 cost: CostModelParams = CostModelParams()) -> SketchResult:
    """Left-sketch ``A`` and solve the ``(p, s)`` problem on ``S A`` with
    :func:`truncated_lra` instead of an SVD of ``S A T``."""
    A = check_matrix(A, "A")
    m, n = A.shape
    if cfg.rank_k > min(m, n):
        raise InvalidArgumentError("rank_k exceeds the matrix dimensions")
    master = SeededRng(cfg.seed)
    s = min(cfg.sketch_rows(n), n)
    SA, s_degenerate = _left_sketch(A, s, master.spawn(1))
    if SA.shape[0] > n:
        raise InvalidArgumentError("combined_lra needs at most as many sketched rows as columns")
    res = truncated_lra(SA, cfg.rank_k, cfg.p, SA.shape[0], cfg.epsilon,
                        seed=master.spawn(2).seed, sub_epsilon=sub_epsilon,
                        col_multiplier=cfg.col_multiplier,
                        iteration_multiplier=iteration_multiplier, cost=cost)
    return SketchResult(
        Z=res.Z, s=SA.shape[0], r=SA.shape[0], sketch_degenerate=s_degenerate,
        embedding_degenerate=res.embedding_degenerate, rowspace_rank=res.rowspace_rank,
        counters={"sat_svd_calls": 0,
                  "exact_fallbacks": res.solution.counters.get("exact_fallbacks", 0),
                  "sub_epsilon": res.sub_epsilon, "branch": res.solution.branch},
    )
