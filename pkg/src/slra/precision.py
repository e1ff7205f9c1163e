"""Reduced-precision floating-point emulation.

Every arithmetic result is rounded to ``mantissa_bits`` explicit mantissa
bits (round half to even) while being carried in a float64.  Widths up to
26 give exact emulation of a ``w``-bit machine for ``+ - * /`` and ``sqrt``;
wider formats suffer occasional double rounding and are approximate.
Width 52 is native float64 and every rounding is the identity.

:class:`NativeArithmetic` and :class:`EmulatedArithmetic` expose the same
small set of kernels (dots, matrix-vector products, axpy, Householder
least squares) so that the LazySVD solvers can run unchanged on either.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import InvalidArgumentError, NumericFailureError

OPERATIONS = frozenset({"add", "sub", "mul", "div", "sqrt"})
_MANTISSA = 52


@dataclass(frozen=True)
class PrecisionConfig:
    mantissa_bits: int = 52
    rounding: str = "NearestEven"
    apply_to: frozenset = field(default=OPERATIONS)

    def __post_init__(self):
        if not isinstance(self.mantissa_bits, (int, np.integer)) or not 8 <= self.mantissa_bits <= 52:
            raise InvalidArgumentError(f"mantissa_bits must be an integer in [8, 52], got {self.mantissa_bits}")
        if self.rounding != "NearestEven":
            raise InvalidArgumentError(f"unsupported rounding mode {self.rounding!r}")
        object.__setattr__(self, "apply_to", frozenset(self.apply_to))
        unknown = self.apply_to - OPERATIONS
        if unknown:
            raise InvalidArgumentError(f"unknown operations {sorted(unknown)}")

    @property
    def unit_roundoff(self) -> float:
        return 2.0 ** -self.mantissa_bits

    @property
    def exact(self) -> bool:
        return self.mantissa_bits >= _MANTISSA


def round_to_precision(x, cfg: PrecisionConfig):
    """Round ``x`` (scalar or array) to ``cfg.mantissa_bits`` mantissa bits.

    Ties go to the even neighbour.  Non-finite values pass through.  The
    result of rounding an overflowing magnitude is ``inf``, as on hardware.
    """
    arr = np.asarray(x, dtype=np.float64)
    drop = _MANTISSA - cfg.mantissa_bits
    if drop <= 0:
        return arr.copy() if arr.ndim else float(arr)
    bits = arr.view(np.uint64) if arr.ndim else np.array([arr]).view(np.uint64)
    finite = np.isfinite(arr if arr.ndim else np.array([arr]))
    lsb = (bits >> np.uint64(drop)) & np.uint64(1)
    bias = np.uint64((1 << (drop - 1)) - 1) + lsb
    rounded = (bits + bias) & ~np.uint64((1 << drop) - 1)
    out = np.where(finite, rounded, bits).view(np.float64)
    return out if arr.ndim else float(out[0])


def _pairwise_sum(P, rnd):
    """Sum along the last axis by a balanced tree, rounding each level."""
    n = P.shape[-1]
    if n == 0:
        return np.zeros(P.shape[:-1])
    while n > 1:
        if n % 2:
            P = np.concatenate([P, np.zeros(P.shape[:-1] + (1,))], axis=-1)
            n += 1
        P = rnd(P[..., 0::2] + P[..., 1::2])
        n //= 2
    return P[..., 0]


class NativeArithmetic:
    """Plain float64 kernels (BLAS and LAPACK)."""

    unit_roundoff = 2.0**-53
    mantissa_bits = 52

    def round(self, x):
        return np.asarray(x, dtype=np.float64)

    def dot(self, x, y) -> float:
        return float(np.dot(x, y))

    def matvec(self, A, x):
        return A @ x

    def rmatvec(self, A, x):
        return A.T @ x

    def axpy(self, a, x, y):
        return y + a * x

    def sub(self, x, y):
        return x - y

    def scale(self, x, a):
        return x * a

    def divide(self, x, a):
        return x / a

    def sqrt(self, a):
        return float(np.sqrt(a))

    def norm(self, x) -> float:
        return float(np.linalg.norm(x))

    def householder(self, V):
        return _NativeHouseholder(V)


class EmulatedArithmetic(NativeArithmetic):
    """Kernels that round after every elementary operation.

    Inner products and matrix-vector products round each product and then
    sum pairwise, rounding every partial sum.
    """

    def __init__(self, cfg: PrecisionConfig):
        self.cfg = cfg
        self.mantissa_bits = cfg.mantissa_bits
        self.unit_roundoff = cfg.unit_roundoff

    def _r(self, op, x):
        if op in self.cfg.apply_to:
            return round_to_precision(x, self.cfg)
        return np.asarray(x, dtype=np.float64) if np.ndim(x) else float(x)

    def round(self, x):
        return round_to_precision(np.asarray(x, dtype=np.float64), self.cfg)

    def _check(self, y):
        if not np.all(np.isfinite(y)):
            raise NumericFailureError("non-finite value in emulated arithmetic")
        return y

    def dot(self, x, y) -> float:
        prod = self._r("mul", np.asarray(x) * np.asarray(y))
        return float(self._check(_pairwise_sum(prod[None, :], lambda v: self._r("add", v))[0]))

    def matvec(self, A, x):
        prod = self._r("mul", A * x[None, :])
        return self._check(_pairwise_sum(prod, lambda v: self._r("add", v)))

    def rmatvec(self, A, x):
        return self.matvec(A.T, x)

    def axpy(self, a, x, y):
        return self._check(self._r("add", y + self._r("mul", a * x)))

    def sub(self, x, y):
        return self._check(self._r("sub", x - y))

    def scale(self, x, a):
        return self._check(self._r("mul", x * a))

    def divide(self, x, a):
        return self._check(self._r("div", x / a))

    def sqrt(self, a):
        return float(self._r("sqrt", np.sqrt(a)))

    def norm(self, x) -> float:
        return self.sqrt(self.dot(x, x))

    def householder(self, V):
        return _EmulatedHouseholder(V, self)


def arithmetic_for(cfg: PrecisionConfig | None):
    """Native kernels for ``None``; emulated kernels otherwise."""
    if cfg is None:
        return NativeArithmetic()
    return EmulatedArithmetic(cfg)


class _NativeHouseholder:
    def __init__(self, V):
        self.V = V
        self.empty = V.shape[1] == 0
        if not self.empty:
            self.Q, self.R = scipy.linalg.qr(V, mode="economic")

    def complement(self, x):
        if self.empty:
            return x.copy()
        c = scipy.linalg.solve_triangular(self.R, self.Q.T @ x)
        return x - self.V @ c


class _EmulatedHouseholder:
    """Householder QR of ``V`` carried out in emulated arithmetic.

    The complement projection applies ``Q^T``, zeroes the leading ``s``
    coordinates and applies ``Q``, which is the least-squares residual.
    """

    def __init__(self, V, ar: EmulatedArithmetic):
        self.ar = ar
        d, s = V.shape
        self.s = s
        self.reflectors = []
        R = ar.round(V.copy())
        for j in range(s):
            x = R[j:, j].copy()
            nx = ar.norm(x)
            if nx == 0.0:
                self.reflectors.append(None)
                continue
            alpha = -nx if x[0] >= 0 else nx
            v = x.copy()
            v[0] = float(ar.sub(np.array([v[0]]), np.array([alpha]))[0])
            nv = ar.norm(v)
            if nv == 0.0:
                self.reflectors.append(None)
                continue
            v = ar.divide(v, nv)
            self.reflectors.append(v)
            block = R[j:, j:]
            w = ar.rmatvec(block, v)
            R[j:, j:] = ar.sub(block, ar._r("mul", 2.0 * ar._r("mul", np.outer(v, w))))
        self.R = R[:s, :s]

    def _apply(self, x, order):
        ar = self.ar
        x = x.copy()
        for j in order:
            v = self.reflectors[j]
            if v is None:
                continue
            t = 2.0 * ar.dot(v, x[j:])
            x[j:] = ar.axpy(-t, v, x[j:])
        return x

    def complement(self, x):
        if self.s == 0:
            return np.array(x, dtype=np.float64)
        y = self._apply(np.asarray(x, dtype=np.float64), range(self.s))
        y[: self.s] = 0.0
        return self._apply(y, range(self.s - 1, -1, -1))
