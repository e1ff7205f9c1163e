"""Precision sweeps comparing classical and modified LazySVD."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import json
import math

import numpy as np

from .exceptions import InvalidArgumentError, SlraError
from .lazysvd import KAPPA_BOUND, modified_lazysvd, original_lazysvd_baseline
from .linalg import orthonormalize
from .metrics import SpectrumSpec, approximation_ratio, planted_matrix
from .precision import PrecisionConfig

SCHEMA_VERSION = 1
VARIANTS = {"Alg4": original_lazysvd_baseline, "Alg5": modified_lazysvd}
DEFAULT_PS = (2.0, 4.0, math.inf)

STABILITY_REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "k", "eps", "eta", "widths", "seeds", "rows"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "k": {"type": "integer", "minimum": 1},
        "eps": {"type": "number"},
        "eta": {"type": "number"},
        "widths": {"type": "array", "items": {"type": "integer"}},
        "seeds": {"type": "array", "items": {"type": "integer"}},
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["width", "variant", "seed", "status", "flags", "ratios", "kappa",
                             "leakage", "eps_pca", "matvecs", "error"],
                "properties": {
                    "width": {"type": "integer", "minimum": 8, "maximum": 52},
                    "variant": {"enum": list(VARIANTS)},
                    "seed": {"type": "integer"},
                    "status": {"enum": ["ok", "failure"]},
                    "flags": {"type": "array", "items": {"enum": [
                        "ratio_exceeded", "kappa_exceeded", "leakage_exceeded", "error"]}},
                    "ratios": {"type": "object", "additionalProperties": {"type": ["number", "null"]}},
                    "kappa": {"type": ["number", "null"]},
                    "leakage": {"type": "array", "items": {"type": "number"}},
                    "eps_pca": {"type": ["number", "null"]},
                    "matvecs": {"type": "integer", "minimum": 0},
                    "error": {"type": ["string", "null"]},
                },
            },
        },
    },
}


def standard_test_matrix(n: int = 256, k: int = 5, kappa: float = 100.0, seed: int = 0) -> np.ndarray:
    """Planted ``n x n`` matrix with ``sigma_1 / sigma_{k+1} = kappa``.

    Head values are geometric from ``kappa`` down to 2; the tail decreases
    linearly from 1 to 1/2.
    """
    if not 1 <= k < n:
        raise InvalidArgumentError("need 1 <= k < n")
    if kappa <= 2:
        raise InvalidArgumentError("kappa must exceed 2")
    values = np.concatenate([np.geomspace(kappa, 2.0, k), np.linspace(1.0, 0.5, n - k)])
    return planted_matrix(SpectrumSpec(kind="explicit", n=n, values=values, seed=seed))


def _p_key(p) -> str:
    return "inf" if p == math.inf else f"{p:g}"


@dataclass
class StabilityRow:
    width: int
    variant: str
    seed: int
    status: str
    flags: list
    ratios: dict
    kappa: float | None
    leakage: list
    eps_pca: float | None
    matvecs: int
    error: str | None = None


@dataclass
class StabilityReport:
    k: int
    eps: float
    eta: float
    widths: list
    seeds: list
    rows: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rows"] = [asdict(r) if isinstance(r, StabilityRow) else r for r in self.rows]
        return d

    def to_json(self) -> str:
        return json.dumps(_finite(self.to_dict()), indent=2, sort_keys=True)

    def failures(self):
        return [r for r in self.rows if r.status != "ok"]


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    return obj


def run_cell(A, k, eps, eta, width, variant, seed, ps=DEFAULT_PS, eps_pca=None) -> StabilityRow:
    """One (width, variant, seed) cell.  Errors become failure rows."""
    precision = None if width >= 52 else PrecisionConfig(width)
    try:
        state = VARIANTS[variant](A, k, eps, eta, seed, eps_pca=eps_pca, precision=precision)
    except (SlraError, ArithmeticError, np.linalg.LinAlgError, FloatingPointError) as exc:
        st = getattr(exc, "state", None)
        return StabilityRow(width, variant, seed, "failure", ["error"], {},
                            st.kappa_estimate if st else None,
                            [h["leakage"] for h in st.history] if st else [],
                            st.eps_pca if st else eps_pca, st.matvecs if st else 0,
                            f"{type(exc).__name__}: {exc}")
    W = orthonormalize(state.V)
    ratios = {_p_key(p): float(approximation_ratio(A, W, p, k).value) for p in ps}
    leak = [h["leakage"] for h in state.history]
    flags = []
    if any(not r <= 1 + 2 * eps for r in ratios.values()):
        flags.append("ratio_exceeded")
    if not state.kappa_estimate <= KAPPA_BOUND:
        flags.append("kappa_exceeded")
    if any(x > state.eps_pca for x in leak):
        flags.append("leakage_exceeded")
    return StabilityRow(width, variant, seed, "failure" if flags else "ok", flags, ratios,
                        state.kappa_estimate, leak, state.eps_pca, state.matvecs)


def _run_cell_args(args):
    return run_cell(*args)


def run_lazysvd_sweep(A, k: int, eps: float, widths, seeds, eta: float = 0.1,
                      variants=("Alg4", "Alg5"), ps=DEFAULT_PS, eps_pca=None,
                      n_jobs: int = 1) -> StabilityReport:
    """Run every width x variant x seed cell and collect a report.

    Width 52 runs on native float64 kernels.  Cells are independent; with
    ``n_jobs > 1`` they run in worker processes and rows keep their order.
    """
    widths = [int(w) for w in widths]
    seeds = [int(s) for s in seeds]
    for w in widths:
        PrecisionConfig(w)
    for v in variants:
        if v not in VARIANTS:
            raise InvalidArgumentError(f"unknown variant {v!r}")
    report = StabilityReport(k=k, eps=eps, eta=eta, widths=widths, seeds=seeds)
    cells = [(A, k, eps, eta, w, v, s, tuple(ps), eps_pca)
             for w in widths for v in variants for s in seeds]
    if n_jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            report.rows = list(pool.map(_run_cell_args, cells))
    else:
        report.rows = [_run_cell_args(c) for c in cells]
    return report
