"""Cost model for fast rectangular matrix multiplication.

Multiplying an ``n x n`` matrix by an ``n x n**gamma`` matrix is modeled as
costing ``n**omega(gamma)`` operations, where ``omega(gamma) = 2`` below the
threshold ``alpha`` and grows linearly to ``omega`` at ``gamma = 1``.  All
costs are reported as natural logarithms of operation counts so that
astronomically large ``n`` never overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

from .exceptions import InvalidArgumentError, UndefinedCrossoverError

DEFAULT_OMEGA = 2.371
DEFAULT_ALPHA = 0.31
# The value quoted alongside the closed form for the combined algorithm's
# crossover; the closed form itself evaluates to about 24.4 at the defaults.
STATED_P_TILDE = 22.0

COST_REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "params", "crossover", "runtimes"],
    "properties": {
        "schema_version": {"const": 1},
        "params": {
            "type": "object",
            "required": ["omega", "alpha", "beta", "slack"],
            "properties": {
                "omega": {"type": "number"},
                "alpha": {"type": "number"},
                "beta": {"type": "number"},
                "slack": {"type": "number"},
            },
        },
        "crossover": {
            "type": "object",
            "required": ["p_star", "p_tilde", "p_tilde_stated", "p_sketch_vs_iterative"],
            "properties": {
                "p_star": {"type": "number"},
                "p_tilde": {"type": "number"},
                "p_tilde_stated": {"type": "number"},
                "p_sketch_vs_iterative": {"type": "number"},
            },
        },
        "runtimes": {
            "type": ["object", "null"],
            "properties": {
                "inputs": {"type": "object"},
                "regime": {"enum": ["SmallK", "MidK", "LargeK"]},
                "log_costs": {
                    "type": "object",
                    "additionalProperties": {"type": ["number", "null"]},
                },
                "exponents": {
                    "type": "object",
                    "additionalProperties": {"type": ["number", "null"]},
                },
                "fastest": {"type": "string"},
            },
        },
    },
}


@dataclass(frozen=True)
class CostModelParams:
    """Multiplication exponents ``omega`` and ``alpha``; ``beta`` is derived."""

    omega: float = DEFAULT_OMEGA
    alpha: float = DEFAULT_ALPHA
    slack: float = 0.0

    def __post_init__(self):
        if not 2.0 <= self.omega <= 3.0:
            raise InvalidArgumentError(f"omega must lie in [2, 3], got {self.omega}")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidArgumentError(f"alpha must lie in (0, 1), got {self.alpha}")
        if 1.0 - self.alpha < self.omega - 2.0 - 1e-15:
            raise InvalidArgumentError(
                "need 1 - alpha >= omega - 2 (otherwise beta > 1)"
            )
        if self.slack < 0:
            raise InvalidArgumentError("slack exponent must be non-negative")

    @property
    def beta(self) -> float:
        return (self.omega - 2.0) / (1.0 - self.alpha)


def omega_gamma(gamma: float, params: CostModelParams = CostModelParams()) -> float:
    """Exponent for an ``[n, n, n**gamma]`` product."""
    if not 0.0 < gamma <= 1.0:
        raise InvalidArgumentError(f"gamma must lie in (0, 1], got {gamma}")
    if gamma <= params.alpha:
        return 2.0
    if gamma == 1.0:
        return params.omega
    return 2.0 + (params.omega - 2.0) * (gamma - params.alpha) / (1.0 - params.alpha)


def matmul_cost(n: float, b: float, params: CostModelParams = CostModelParams()) -> float:
    """Natural log of the modeled cost ``T(n, b)`` of an ``[n, n, b]`` product.

    ``T(n, b) = n**2`` for ``b <= n**alpha`` and ``n**(2 - alpha beta) b**beta``
    otherwise.
    """
    if not 1 <= b <= n:
        raise InvalidArgumentError(f"need 1 <= b <= n, got b={b}, n={n}")
    log_n = math.log(n)
    log_b = math.log(b)
    if log_b <= params.alpha * log_n:
        return 2.0 * log_n
    return (2.0 - params.alpha * params.beta) * log_n + params.beta * log_b


def matmul_exponent(n: float, b: float, params: CostModelParams = CostModelParams()) -> float:
    """``log_n T(n, b)``."""
    return matmul_cost(n, b, params) / math.log(n)


def crossover_points(params: CostModelParams = CostModelParams()) -> dict:
    """Values of p where the predicted winner between algorithms changes.

    ``p_star`` compares the sketching pipeline with the dual-block iterative
    algorithm, ``p_tilde`` the combined algorithm with the iterative one, and
    ``p_sketch_vs_iterative`` the two earlier algorithms at constant accuracy.
    """
    w = params.omega
    if w <= 2.0:
        raise UndefinedCrossoverError("crossover points are undefined for omega = 2")
    beta = params.beta
    return {
        "p_star": 2.0 * w / (w - 2.0),
        "p_tilde": 4.0 * (1.0 + 2.0 * beta) / (w - 2.0) + 2.0,
        "p_tilde_stated": STATED_P_TILDE,
        "p_sketch_vs_iterative": 2.0 * (w - 1.0) / (w - 2.0),
    }


def combination_exponent(params: CostModelParams = CostModelParams()) -> float:
    """``2 + (1 - alpha) beta / (1 + 2 beta)`` (equals ``2 + (omega-2)/(1+2beta)``)."""
    beta = params.beta
    return 2.0 + (1.0 - params.alpha) * beta / (1.0 + 2.0 * beta)


def regime(n: float, k: float, epsilon: float, params: CostModelParams = CostModelParams()) -> str:
    n_alpha = n ** params.alpha
    if k <= epsilon * n_alpha:
        return "SmallK"
    if k <= n_alpha:
        return "MidK"
    return "LargeK"


def _logsumexp(*terms):
    terms = [t for t in terms if t is not None]
    top = max(terms)
    return top + math.log(sum(math.exp(t - top) for t in terms))


def predicted_runtimes(n, k, p, epsilon, params: CostModelParams = CostModelParams()) -> dict:
    """Log-space runtime predictions for the competing algorithms.

    Constant factors and polylog factors hidden by the asymptotic statements
    are dropped; ``params.slack`` is added to every exponent of ``n`` that
    carries the arbitrary-small ``eta`` slack.  Entries are ``None`` where an
    algorithm does not apply (e.g. the sketching row for ``p > 2`` when
    ``p < 2``).
    """
    if n < 1 or not 1 <= k <= n:
        raise InvalidArgumentError("need 1 <= k <= n")
    if p < 1:
        raise InvalidArgumentError("p must be >= 1")
    if not 0 < epsilon <= 1:
        raise InvalidArgumentError("epsilon must lie in (0, 1]")
    a, b, w, eta = params.alpha, params.beta, params.omega, params.slack
    ln, lk, lp, le = math.log(n), math.log(k), math.log(p), math.log(epsilon)
    reg = regime(n, k, epsilon, params)
    e = b / (1 + 2 * b)
    base = 0.5 * lp + (2 + eta) * ln
    if reg == "SmallK":
        ours = base
    elif reg == "MidK":
        ours = max(base, lp / (2 * (1 + 2 * b)) + (2 + eta) * ln + e * (lk - a * ln - le))
    else:
        ours = (0.5 * lp - b * le) / (1 + 2 * b) + (2 + eta - a * b) * ln + b * lk

    bakshi = _logsumexp(
        lp / 6 - le / 3 + 2 * ln + lk + math.log(math.log(n / epsilon) + 1),
        ln + (w - 1) / 6 * lp + (w - 1) * lk - (w - 1) / 3 * le,
    )

    if p > 2:
        t = 1 - 2 / p
        sketch = _logsumexp(
            2 * ln + math.log(ln + 1),
            w * t * ln + 2 * w / p * lk - 2 * w / (p + 2) * le,
            (1 + (w - 1) * t) * ln + 2 * (w - 1) / p * (lk - le),
        )
        comb_exp = combination_exponent(params) + eta
        combined = _logsumexp(t * comb_exp * ln - le, 2 * ln)
    else:
        g = 4 / p - 1
        sketch = _logsumexp(
            2 * ln + math.log(ln + 1),
            ln + 2 * (w - 1) / p * lk - g * (w - 1) * le,
            2 * w / p * lk - g * (2 * w + 2) * le,
        )
        combined = None

    log_costs = {
        "dual_block_krylov": ours,
        "bakshi_clarkson_woodruff": bakshi,
        "li_woodruff": sketch,
        "combined": combined,
        "svd": w * ln,
    }
    exponents = {key: (None if v is None else v / ln) for key, v in log_costs.items()}
    fastest = min((v, key) for key, v in log_costs.items() if v is not None)[1]
    return {
        "inputs": {"n": n, "k": k, "p": p, "epsilon": epsilon},
        "regime": reg,
        "log_costs": log_costs,
        "exponents": exponents,
        "fastest": fastest,
    }


def combined_subproblem_exponent(p: float, params: CostModelParams = CostModelParams()) -> float:
    """Exponent of ``n`` for the combined algorithm at constant ``k`` and accuracy.

    ``max(2, (1 - 2/p) * (2 + slack + (1-alpha) beta / (1 + 2 beta)))``; it
    leaves ``2`` exactly at ``p_tilde``.
    """
    if p <= 2:
        raise InvalidArgumentError("the combined algorithm needs p > 2")
    return max(2.0, (1 - 2 / p) * (combination_exponent(params) + params.slack))


def sketch_exponent(p: float, params: CostModelParams = CostModelParams()) -> float:
    """Exponent of ``n`` for the sketching pipeline at constant ``k`` and accuracy."""
    if p <= 2:
        raise InvalidArgumentError("the sketching pipeline row needs p > 2")
    return max(2.0, (1 - 2 / p) * params.omega)


def cost_report(params: CostModelParams = CostModelParams(), n=None, k=None, p=None,
                epsilon=None) -> dict:
    """Machine-readable report matching :data:`COST_REPORT_SCHEMA`."""
    report = {
        "schema_version": 1,
        "params": {"omega": params.omega, "alpha": params.alpha, "beta": params.beta,
                   "slack": params.slack},
        "crossover": crossover_points(params),
        "runtimes": None,
    }
    if None not in (n, k, p, epsilon):
        report["runtimes"] = predicted_runtimes(n, k, p, epsilon, params)
    return report
