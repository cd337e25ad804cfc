"""Block-diagonalization precoding for cooperative multi-cell downlinks.

Computes optimal and suboptimal zero-forcing precoders maximizing the
weighted sum-rate of the stacked (multi-cell) MIMO broadcast channel under
per-BS, per-antenna, or sum power constraints, via Lagrangian duality with
an ellipsoid price search.
"""

from .bd_optimal import Solution, diagonalized_form, solve_optimal, waterfill
from .bd_suboptimal import solve_suboptimal
from .evaluate import AuditRecord, Metrics, audit, metrics, oracle_solve
from .experiments import (
    ExperimentResult,
    run_custom,
    run_fig1,
    run_fig2,
    run_fig3,
    run_fig4,
    save_result,
    write_csv,
    write_json,
)
from .model import (
    ConstraintScheme,
    PrecodingMode,
    ProblemInstance,
    SystemConfig,
    build_instance,
)
from .zfbf import optimal_miso_beams, pseudo_inverse_beams

__version__ = "0.1.0"

__all__ = [
    "SystemConfig",
    "ProblemInstance",
    "ConstraintScheme",
    "PrecodingMode",
    "build_instance",
    "solve_optimal",
    "solve_suboptimal",
    "optimal_miso_beams",
    "pseudo_inverse_beams",
    "waterfill",
    "diagonalized_form",
    "metrics",
    "Metrics",
    "audit",
    "AuditRecord",
    "oracle_solve",
    "Solution",
    "ExperimentResult",
    "run_fig1",
    "run_fig2",
    "run_fig3",
    "run_fig4",
    "run_custom",
    "write_csv",
    "write_json",
    "save_result",
    "__version__",
]
