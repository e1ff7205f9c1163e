"""Randomized Schatten-p low-rank approximation."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    ContractViolationError,
    DegenerateDeflationError,
    IllConditionedBasisError,
    InvalidArgumentError,
    NumericFailureError,
    SlraError,
    UndefinedCrossoverError,
)
from .block_krylov import KrylovConfig, KrylovResult, block_krylov  # noqa: E402
from .cost_model import CostModelParams, crossover_points, matmul_cost, omega_gamma, predicted_runtimes  # noqa: E402
from .schatten import LowRankSolution, schatten_lra  # noqa: E402
from .sketch import SketchConfig, combined_lra, lw_lra, truncated_lra  # noqa: E402
from .lazysvd import (  # noqa: E402
    AppxPcaConfig,
    DeflationState,
    MatvecOracle,
    appx_pca,
    deflated_matvec,
    modified_lazysvd,
    original_lazysvd_baseline,
)
from .precision import PrecisionConfig, round_to_precision  # noqa: E402
from .stability import StabilityReport, run_lazysvd_sweep  # noqa: E402
from .metrics import SpectrumSpec, approximation_ratio, planted_matrix, principal_angles  # noqa: E402
from .estimators import SchattenLRA, SketchedSchattenLRA, StableLazySVD  # noqa: E402

__all__ = [
    "AppxPcaConfig", "ContractViolationError", "CostModelParams", "DeflationState",
    "DegenerateDeflationError", "IllConditionedBasisError", "InvalidArgumentError",
    "KrylovConfig", "KrylovResult", "LowRankSolution", "MatvecOracle", "NumericFailureError",
    "PrecisionConfig", "SchattenLRA", "SketchConfig", "SketchedSchattenLRA", "SlraError",
    "SpectrumSpec", "StabilityReport", "StableLazySVD", "UndefinedCrossoverError",
    "appx_pca", "approximation_ratio", "block_krylov", "combined_lra", "crossover_points",
    "deflated_matvec", "lw_lra", "matmul_cost", "modified_lazysvd", "omega_gamma",
    "original_lazysvd_baseline", "planted_matrix", "predicted_runtimes", "principal_angles",
    "round_to_precision", "run_lazysvd_sweep", "schatten_lra", "truncated_lra",
]
