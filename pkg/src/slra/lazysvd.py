"""Stable LazySVD: Lanczos-based approximate PCA with deflation by least squares.

:func:`modified_lazysvd` keeps the raw AppxPCA outputs ``v'_1 .. v'_k`` as
the columns of ``V`` and applies ``I - Proj_colspace(V)`` by Householder
least squares instead of orthonormalizing.  :func:`original_lazysvd_baseline`
is the classical variant with explicit Gram-Schmidt deflation, kept for
comparison under reduced precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Callable

import numpy as np
import scipy.linalg

from ._rng import SeededRng, as_rng
from .exceptions import (
    ContractViolationError,
    DegenerateDeflationError,
    InvalidArgumentError,
    NumericFailureError,
)
from .linalg import check_matrix
from .precision import NativeArithmetic, PrecisionConfig, arithmetic_for

KAPPA_ABORT = 8.0
KAPPA_BOUND = 4.0
NORM_TOL = 1e-8
WARMUP_STEPS = 10
MIN_SPECTRAL_RATIO = 1e-8


@dataclass(frozen=True)
class AppxPcaConfig:
    """Accuracy ``eps``, leakage bound ``eps_pca``, failure probability ``eta``
    and the constant ``C`` in ``q = ceil(C / eps * ln(d / (eps_pca eta)))``."""

    eps: float
    eps_pca: float
    eta: float
    degree_multiplier: float = 1.0

    def __post_init__(self):
        for name in ("eps", "eps_pca", "eta"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise InvalidArgumentError(f"{name} must lie in (0, 1), got {v}")
        if not self.degree_multiplier > 0:
            raise InvalidArgumentError("degree_multiplier must be positive")

    def power(self, d: int) -> int:
        return max(1, math.ceil(self.degree_multiplier / self.eps
                                * math.log(max(d, 2) / (self.eps_pca * self.eta))))

    def gamma(self, d: int) -> float:
        return (self.eps_pca * self.eta / (max(d, 2) * self.power(d))) ** 2

    def lanczos_degree(self, d: int) -> int:
        """``min(d, ceil(sqrt(2 q ln(1/gamma))))``."""
        q = self.power(d)
        return min(d, math.ceil(math.sqrt(2 * q * math.log(1 / self.gamma(d)))))


class MatvecOracle:
    """Counts calls to ``fn`` and rejects non-finite outputs.

    ``eps_m`` is the declared relative accuracy of ``fn`` with respect to
    the exact operator.
    """

    def __init__(self, dimension: int, fn: Callable, eps_m: float = 0.0):
        if dimension < 1:
            raise InvalidArgumentError("dimension must be >= 1")
        self.dimension = int(dimension)
        self.fn = fn
        self.eps_m = float(eps_m)
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        y = np.asarray(self.fn(x), dtype=np.float64)
        if y.shape != (self.dimension,):
            raise InvalidArgumentError(f"oracle returned shape {y.shape}")
        if not np.all(np.isfinite(y)):
            raise NumericFailureError("matvec oracle returned a non-finite vector")
        return y

    @classmethod
    def gram(cls, A, arithmetic=None) -> "MatvecOracle":
        """``x -> A^T (A x)``."""
        ar = arithmetic or NativeArithmetic()
        return cls(A.shape[1], lambda x: ar.rmatvec(A, ar.matvec(A, x)),
                   eps_m=ar.unit_roundoff * A.shape[0])


@dataclass
class LanczosRun:
    basis: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray
    breakdown: bool
    warmup_top: float


def lanczos(oracle, z, steps: int, arithmetic=None) -> LanczosRun:
    """Lanczos with full (two-pass) reorthogonalization.

    Stops early when the residual vanishes relative to the running norm
    estimate, which means an invariant subspace has been found.
    """
    ar = arithmetic or NativeArithmetic()
    d = len(z)
    nz = ar.norm(z)
    if nz == 0:
        raise NumericFailureError("zero start vector")
    Q = np.zeros((d, steps))
    Q[:, 0] = ar.divide(z, nz)
    alphas, betas = [], []
    scale = 0.0
    warmup_top = 0.0
    tol = max(1e-12, 16 * ar.unit_roundoff * math.sqrt(d))
    breakdown = False
    for j in range(steps):
        w = oracle(Q[:, j])
        a = ar.dot(Q[:, j], w)
        alphas.append(a)
        w = ar.axpy(-a, Q[:, j], w)
        if j > 0:
            w = ar.axpy(-betas[-1], Q[:, j - 1], w)
        basis = Q[:, : j + 1]
        for _ in range(2):
            w = ar.sub(w, ar.matvec(basis, ar.rmatvec(basis, w)))
        b = ar.norm(w)
        scale = max(scale, abs(a) + b)
        if j + 1 == min(WARMUP_STEPS, steps):
            warmup_top = float(_ritz(alphas, betas)[0][-1])
        if j + 1 == steps:
            break
        if b <= tol * scale or b == 0.0:
            breakdown = True
            break
        betas.append(b)
        Q[:, j + 1] = ar.divide(w, b)
    m = len(alphas)
    if not warmup_top:
        warmup_top = float(_ritz(alphas, betas[: m - 1])[0][-1])
    return LanczosRun(Q[:, :m], np.array(alphas), np.array(betas[: m - 1]), breakdown, warmup_top)


def _ritz(alphas, betas):
    a = np.asarray(alphas, dtype=np.float64)
    b = np.asarray(betas[: len(a) - 1], dtype=np.float64)
    if len(a) == 1:
        return a.copy(), np.ones((1, 1))
    return scipy.linalg.eigh_tridiagonal(a, b)


def appx_pca(oracle, lambda1_lower: float | None, cfg: AppxPcaConfig, rng,
             arithmetic=None, return_info: bool = False):
    """Unit vector ``w`` whose energy on eigenvectors with eigenvalue at most
    ``(1 - eps) lambda_1`` is at most ``eps_pca`` (with probability
    ``1 - eta``).

    The Lanczos approximation to ``M^q z`` is formed from the tridiagonal
    ``T``: ``w ~ Q_L f(T) e_1`` with ``f(x) = (x / theta_max)^q``.  The
    small tridiagonal eigenproblem is solved in float64.
    ``lambda1_lower`` (may be ``None``) seeds the estimate of ``lambda_1``
    used to validate the polynomial window ``[-rho, lambda_1 + rho]`` with
    ``rho = lambda_1 / q``.
    """
    ar = arithmetic or NativeArithmetic()
    rng = as_rng(rng)
    d = oracle.dimension
    q = cfg.power(d)
    steps = cfg.lanczos_degree(d)
    z = ar.round(rng.normal(d))
    run = lanczos(oracle, z, steps, ar)
    theta, S = _ritz(run.alphas, run.betas)
    lam1 = max(float(lambda1_lower or 0.0), run.warmup_top)
    rho = lam1 / q
    top = float(theta[-1])
    revalidated = top > lam1 + rho
    if revalidated:
        lam1 = top
    info = {"steps": len(run.alphas), "power": q, "breakdown": run.breakdown,
            "lambda1_estimate": lam1, "window_revalidated": revalidated,
            "top_ritz": top}
    if top <= 0:
        w = run.basis[:, 0].copy()
    else:
        weights = np.clip(theta / top, 0.0, None) ** q * S[0, :]
        w = ar.matvec(run.basis, ar.round(S @ weights))
        w = ar.divide(w, ar.norm(w))
    return (w, info) if return_info else w


@dataclass
class DeflationState:
    """Accumulated directions ``V = [v'_1 .. v'_s]`` (never orthonormalized
    by the modified solver) and per-step diagnostics."""

    V: np.ndarray
    s: int = 0
    kappa_estimate: float = 1.0
    history: list = field(default_factory=list)
    matvecs: int = 0
    eps_pca: float = float("nan")
    variant: str = "modified"
    estimate_matvecs: int = 0

    @classmethod
    def empty(cls, d: int, **kw) -> "DeflationState":
        return cls(V=np.zeros((d, 0)), **kw)

    def singular_range(self):
        if self.s == 0:
            return 1.0, 1.0
        sv = np.linalg.svd(self.V, compute_uv=False)
        return float(sv[0]), float(sv[-1])

    def invariants_hold(self) -> bool:
        smax, smin = self.singular_range()
        norms = np.linalg.norm(self.V, axis=0)
        return bool(smax <= 2 and smin >= 0.5 and np.all(np.abs(norms - 1) <= NORM_TOL))


def _kappa(V) -> tuple[float, float, float]:
    sv = np.linalg.svd(V, compute_uv=False)
    kappa = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    return kappa, float(sv[0]), float(sv[-1])


def _leakage(V, w) -> float:
    """``||Proj_colspace(V) w||^2`` in float64."""
    if V.shape[1] == 0:
        return 0.0
    Qv, _ = np.linalg.qr(V)
    return float(np.sum((Qv.T @ w) ** 2))


def deflated_matvec(A, state: DeflationState, x, arithmetic=None):
    """``(I - P) A^T A (I - P) x`` with ``P = Proj_colspace(V)`` applied by
    Householder least squares against the raw ``V``."""
    ar = arithmetic or NativeArithmetic()
    if state.kappa_estimate > KAPPA_ABORT:
        raise ContractViolationError(
            f"kappa(V) = {state.kappa_estimate:.3g} exceeds {KAPPA_ABORT}; an AppxPCA call failed upstream")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (state.V.shape[0],):
        raise InvalidArgumentError("x has the wrong length")
    h = ar.householder(state.V)
    y = h.complement(x)
    y = ar.rmatvec(A, ar.matvec(A, y))
    return h.complement(y)


def _gram_operator(A, oracle, ar):
    if oracle is not None:
        return oracle, None
    A = check_matrix(A, "A")
    A = ar.round(A)
    return MatvecOracle.gram(A, ar), A


def _estimate_spectrum(M, k, rng, ar):
    """``(lambda_1, lambda_{k+1})`` from a short Lanczos run."""
    d = M.dimension
    steps = min(d, 2 * k + 20)
    run = lanczos(M, ar.round(rng.normal(d)), steps, ar)
    theta = _ritz(run.alphas, run.betas)[0][::-1]
    lam1 = float(theta[0])
    lamk1 = float(theta[k]) if k < len(theta) else 0.0
    return lam1, max(lamk1, 0.0), len(run.alphas)


def default_eps_pca(eps: float, k: int, d: int, sigma_ratio: float) -> float:
    """``min(eps^2, 1/(64 k^2), (sigma_{k+1}/sigma_1)^2 eps^2 / d)``.

    ``sigma_ratio`` is floored at ``1e-8`` so that exactly low-rank inputs
    still get a finite Lanczos degree.
    """
    r = max(sigma_ratio, MIN_SPECTRAL_RATIO)
    return min(eps**2, 1.0 / (64 * k * k), r * r * eps**2 / d)


def estimate_steps(k: int, d: int) -> int:
    return min(d, 2 * k + 20)


def matvec_budget(d: int, k: int, eps: float, eps_pca: float, eta: float,
                  degree_multiplier: float = 1.0, pca_eps: float | None = None) -> int:
    """Gram matvec budget: ``k * L + min(d, 2k + 20)``.

    ``L = min(d, ceil(sqrt(2 q ln(1/gamma))))`` with
    ``q = ceil(C eps^-1 ln(d k / (eps_pca eta)))`` and
    ``gamma = (eps_pca (eta/k) / (d q))^2`` is the per-call Lanczos degree,
    i.e. ``O(eps^-1/2 log(d k / (eps eps_pca eta)))`` with leading constant
    ``2 sqrt(C)``.  The second term pays for the spectrum pre-estimate.
    """
    cfg = AppxPcaConfig(pca_eps if pca_eps is not None else eps, eps_pca, eta / k, degree_multiplier)
    return k * cfg.lanczos_degree(d) + estimate_steps(k, d)


def _lazysvd(A, k, eps, eta, seed, eps_pca, degree_multiplier, precision, oracle, variant):
    ar = arithmetic_for(precision)
    M, A_round = _gram_operator(A, oracle, ar)
    d = M.dimension
    if not 1 <= k <= d:
        raise InvalidArgumentError(f"k must lie in [1, {d}], got {k}")
    if A_round is not None and k > min(A_round.shape):
        raise InvalidArgumentError("k exceeds the matrix dimensions")
    if not 0 < eps < 1 or not 0 < eta < 1:
        raise InvalidArgumentError("eps and eta must lie in (0, 1)")
    master = SeededRng(seed)
    estimate_calls = 0
    if eps_pca is None:
        lam1, lamk1, estimate_calls = _estimate_spectrum(M, k, master.spawn(0), ar)
        if lam1 <= 0:
            raise InvalidArgumentError("A is zero")
        eps_pca = default_eps_pca(eps, k, d, math.sqrt(lamk1 / lam1))
    pca_eps = eps if variant == "modified" else eps / 2
    cfg = AppxPcaConfig(pca_eps, eps_pca, eta / k, degree_multiplier)
    state = DeflationState.empty(d, eps_pca=eps_pca, variant=variant)
    basis = np.zeros((d, 0))
    delta = ar.unit_roundoff * d
    prev_max, prev_min = 1.0, 1.0
    for s in range(1, k + 1):
        if variant == "modified":
            h = ar.householder(state.V)
            proj = h.complement
        else:
            Vb = state.V
            proj = (lambda x, Vb=Vb: ar.sub(x, ar.matvec(Vb, ar.rmatvec(Vb, x)))) if s > 1 else np.copy
        Ms = MatvecOracle(d, lambda x, proj=proj: proj(M(proj(x))))
        w, info = appx_pca(Ms, None, cfg, master.spawn(s), ar, return_info=True)
        leak = _leakage(state.V, w)
        if variant == "modified":
            v = w
        else:
            c = ar.rmatvec(state.V, w)
            v = ar.sub(w, ar.matvec(state.V, c))
            nv = ar.norm(v)
            if nv <= 1e3 * ar.unit_roundoff * ar.norm(w) or nv == 0:
                raise DegenerateDeflationError(f"deflated vector vanished at step {s}")
            v = ar.divide(v, nv)
        state.V = np.column_stack([state.V, v])
        state.s = s
        state.matvecs += Ms.calls
        kappa, smax, smin = _kappa(state.V)
        state.kappa_estimate = kappa
        rq = float(np.sum((A_round @ v) ** 2) / (v @ v)) if A_round is not None else float(v @ M.fn(v) / (v @ v))
        max_bound = max(prev_max, 1 + delta) + math.sqrt(eps_pca)
        min_bound = math.sqrt(max(0.0, min(prev_min**2, 1 - delta) - prev_max * math.sqrt(eps_pca)))
        state.history.append({
            "step": s, "leakage": leak, "kappa": kappa, "sigma_max": smax, "sigma_min": smin,
            "sigma_max_bound": max_bound, "sigma_min_bound": min_bound,
            "recursion_ok": bool(smax <= max_bound * (1 + 1e-12) and smin >= min_bound * (1 - 1e-12)),
            "norm": float(np.linalg.norm(v)), "rayleigh": rq, "matvecs": Ms.calls, **info,
        })
        prev_max, prev_min = smax, smin
        if variant == "modified" and kappa > KAPPA_ABORT:
            err = ContractViolationError(
                f"kappa(V_{s}) = {kappa:.3g} exceeds {KAPPA_ABORT}; AppxPCA leakage {leak:.3g} "
                f"against eps_pca {eps_pca:.3g}")
            err.state = state
            raise err
    state.matvecs += estimate_calls
    state.estimate_matvecs = estimate_calls
    return state


def modified_lazysvd(A, k: int, eps: float, eta: float = 0.1, seed: int = 0, *,
                     eps_pca: float | None = None, degree_multiplier: float = 1.0,
                     precision: PrecisionConfig | None = None,
                     oracle: MatvecOracle | None = None) -> DeflationState:
    """Modified LazySVD on ``M = A^T A`` (or on a supplied Gram ``oracle``).

    Each step runs AppxPCA with accuracy ``eps``, leakage ``eps_pca`` and
    failure budget ``eta / k`` on ``(I - P) M (I - P)``, ``P`` being the
    projection onto the span of the raw directions found so far.  With
    probability ``1 - eta`` the span of ``V`` gives, for every ``p >= 2``,
    ``||A (I - Proj(V))||_p <= (1 + O(eps)) ||A - A_k||_p`` and
    ``kappa(V) <= 4``.

    Raises :class:`ContractViolationError` when ``kappa(V)`` exceeds 8.
    ``precision`` runs every kernel in emulated arithmetic.
    """
    return _lazysvd(A, k, eps, eta, seed, eps_pca, degree_multiplier, precision, oracle, "modified")


def original_lazysvd_baseline(A, k: int, eps: float, eta: float = 0.1, seed: int = 0, *,
                              eps_pca: float | None = None, degree_multiplier: float = 1.0,
                              precision: PrecisionConfig | None = None,
                              oracle: MatvecOracle | None = None) -> DeflationState:
    """Classical LazySVD: AppxPCA at accuracy ``eps / 2`` followed by an
    explicit Gram-Schmidt step ``v = (I - V V^T) v' / ||.||``.

    No stability guarantee; the condition of ``V`` is recorded, never
    enforced.
    """
    return _lazysvd(A, k, eps, eta, seed, eps_pca, degree_multiplier, precision, oracle, "original")
