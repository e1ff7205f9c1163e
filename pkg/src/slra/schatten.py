"""Dual-block-size Schatten-p low-rank approximation.

Block Krylov iteration is run twice: with block size ``k`` for roughly
``q log n`` iterations, and with the larger block ``b' + k`` for roughly
``sqrt(p) log(n / eps)`` iterations.  The first run wins on matrices with a
flat spectrum near ``sigma_k``; the second on matrices with a gap between
``sigma_k`` and ``sigma_{b'+k}``.  Ritz values from the larger run decide
which of the two subspaces is returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from ._rng import SeededRng
from .block_krylov import KrylovConfig, block_krylov, complete_basis
from .cost_model import CostModelParams, regime as _regime
from .exceptions import InvalidArgumentError
from .linalg import check_matrix, orthonormalize, schatten_norm, svd

BRANCHES = ("W1", "W2", "ExactFallback", "LazySVD")


def _ceil(x: float) -> int:
    # guards against 2.0000000000000004 -> 3
    return int(math.ceil(x * (1.0 - 1e-12)))


@dataclass
class LraParams:
    rank_k: int
    p: float
    epsilon: float
    q: int
    b_prime: int
    regime: str
    q_exact: float


def choose_params(n: int, k: int, p: float, epsilon: float,
                  cost: CostModelParams = CostModelParams()) -> LraParams:
    """Iteration parameter ``q`` and extra block ``b'`` for an ``n``-dimensional problem."""
    if not 1 <= k <= n:
        raise InvalidArgumentError(f"need 1 <= k <= n, got k={k}, n={n}")
    if not (np.isfinite(p) and p >= 1):
        raise InvalidArgumentError(f"p must be a finite value >= 1, got {p}")
    if not 0 < epsilon < 1:
        raise InvalidArgumentError(f"epsilon must lie in (0, 1), got {epsilon}")
    beta = cost.beta
    reg = _regime(n, k, epsilon, cost)
    root_p = math.sqrt(p)
    if reg == "SmallK":
        q_exact = root_p
    else:
        scale = p ** (1.0 / (2.0 * (1.0 + 2.0 * beta)))
        expo = beta / (1.0 + 2.0 * beta)
        if reg == "MidK":
            q_exact = max(root_p, scale * (k / (n ** cost.alpha * epsilon)) ** expo)
        else:
            q_exact = max(root_p, scale / epsilon ** expo)
    q = max(1, _ceil(q_exact))
    b_prime = _ceil(1.5 * max(1.0, k / (q * q * epsilon)))
    return LraParams(k, p, epsilon, q, b_prime, reg, q_exact)


def select_branch(sigma_hat_k: float, sigma_hat_bk: float, p: float) -> str:
    """``"W2"`` iff ``sigma_hat_k >= (1 + 1/(2p)) * sigma_hat_bk``."""
    if sigma_hat_k < 0 or sigma_hat_bk < 0:
        raise InvalidArgumentError("singular value estimates must be non-negative")
    if p < 1:
        raise InvalidArgumentError("p must be >= 1")
    return "W2" if sigma_hat_k >= (1.0 + 1.0 / (2.0 * p)) * sigma_hat_bk else "W1"


@dataclass
class LowRankSolution:
    """Orthonormal ``n x k`` factor ``W`` with ``A (I - W W^T)`` the residual."""

    W: np.ndarray
    branch: str
    sigma_hat_k: float
    sigma_hat_bk: float
    params: LraParams | None = None
    achieved_error: float | None = None
    candidates: dict = field(default_factory=dict)
    counters: dict = field(default_factory=dict)


def right_factor(A, Z, k, rng) -> np.ndarray:
    """Orthonormal basis of ``colspace(A^T Z)``, padded to ``k`` columns."""
    return complete_basis(orthonormalize(A.T @ Z), k, rng)


def _exact_solution(A, k, params, sv_index):
    res = svd(A)
    s = res.singular_values
    sk = float(s[k - 1]) if k <= len(s) else 0.0
    sbk = float(s[sv_index - 1]) if sv_index <= len(s) else 0.0
    return LowRankSolution(
        W=res.Vt[:k].T.copy(), branch="ExactFallback", sigma_hat_k=sk, sigma_hat_bk=sbk,
        params=params, counters={"products": 0, "exact_fallbacks": 1},
    )


def schatten_lra(A, k: int, p: float, epsilon: float, seed: int = 0,
                 cost: CostModelParams = CostModelParams(), iteration_multiplier: float = 1.0,
                 saturation: str = "exact", measure_error: bool = False,
                 eta: float = 0.1) -> LowRankSolution:
    """Rank-``k`` Schatten-``p`` subspace approximation.

    Returns ``W`` such that, with probability at least 0.9,
    ``||A (I - W W^T)||_p <= (1 + O(eps)) ||A - A_k||_p``.

    Parameters
    ----------
    A : array of shape (m, n)
    k : int
        Target rank, ``1 <= k <= min(m, n)``.
    p : float
        Schatten exponent ``>= 1``.  ``np.inf`` is delegated to the stable
        LazySVD solver, whose guarantee covers the operator norm.
    epsilon : float
        Accuracy in ``(0, 1)``.
    seed : int
        Master seed; the two Krylov runs use independent child streams
        ``SeededRng(seed).spawn(1)`` and ``.spawn(2)``.
    iteration_multiplier : float
        Scales both iteration counts ``ceil(q log2 n)`` and
        ``ceil(sqrt(p) log2(n / eps))``.
    saturation : {"exact", "truncate"}
        Passed to :class:`KrylovConfig`.
    measure_error : bool
        Also compute the achieved Schatten-p error with a dense SVD.
    """
    A = check_matrix(A, "A")
    m, n = A.shape
    dim = min(m, n)
    if not 1 <= k <= dim:
        raise InvalidArgumentError(f"k must lie in [1, {dim}], got {k}")
    if not 0 < epsilon < 1:
        raise InvalidArgumentError(f"epsilon must lie in (0, 1), got {epsilon}")
    if p == np.inf:
        from .lazysvd import modified_lazysvd

        state = modified_lazysvd(A, k, epsilon, eta, seed)
        W = orthonormalize(state.V)
        sol = LowRankSolution(W=W, branch="LazySVD", sigma_hat_k=float("nan"),
                              sigma_hat_bk=float("nan"),
                              counters={"matvecs": state.matvecs, "exact_fallbacks": 0})
        if measure_error:
            sol.achieved_error = schatten_norm(A - (A @ W) @ W.T, p)
        return sol
    if iteration_multiplier <= 0:
        raise InvalidArgumentError("iteration_multiplier must be positive")

    N = max(m, n)
    params = choose_params(N, k, p, epsilon, cost)
    big_block = params.b_prime + k
    if k == dim or big_block >= dim:
        sol = _exact_solution(A, k, params, big_block)
    else:
        master = SeededRng(seed)
        s1, s2 = master.spawn(1), master.spawn(2)
        iters1 = max(1, _ceil(iteration_multiplier * params.q * math.log2(N)))
        iters2 = max(1, _ceil(iteration_multiplier * math.sqrt(p) * math.log2(N / epsilon)))
        run1 = block_krylov(A, KrylovConfig(k, k, iters1, s1.seed, saturation))
        run2 = block_krylov(A, KrylovConfig(k, big_block, iters2, s2.seed, saturation))
        W1 = right_factor(A, run1.Z, k, s1.spawn(7))
        W2 = right_factor(A, run2.Z, k, s2.spawn(7))
        est = run2.sigma_estimates
        sk = float(est[k - 1]) if k <= len(est) else 0.0
        sbk = float(est[big_block - 1]) if big_block <= len(est) else 0.0
        branch = select_branch(sk, sbk, p)
        sol = LowRankSolution(
            W=W2 if branch == "W2" else W1, branch=branch, sigma_hat_k=sk, sigma_hat_bk=sbk,
            params=params, candidates={"W1": W1, "W2": W2},
            counters={
                "products": run1.products + run2.products,
                "exact_fallbacks": int(run1.exact_fallback) + int(run2.exact_fallback),
                "iterations": (iters1, iters2),
            },
        )
    if measure_error:
        W = sol.W
        sol.achieved_error = schatten_norm(A - (A @ W) @ W.T, p)
    return sol
