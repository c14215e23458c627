"""Optimal wage/action contracts under limited liability, with KKT audits."""

from .cara_solver import (
    CaraSolution,
    cara_ll_solve,
    perturbation_path,
    perturbed_solve,
    second_moment_bound,
    wage_curve,
)
from .exceptions import (
    ConvergenceError,
    GridTooLargeError,
    InfeasibleProblemError,
    NoInteriorStatesError,
    PactSolveError,
    ProblemValidationError,
    UnsupportedProblemError,
)
from .general_solver import GeneralSolution, SolverConfig, general_ll_solve, gradient
from .model import (
    Multipliers,
    Parametric,
    ProblemSpec,
    StateWise,
    agent_value,
    is_feasible,
    pc_residual,
    principal_value,
    rs_solve,
)
from .shock import ShockGrid, custom, gauss_hermite, uniform
from .utility import UtilityKind, UtilitySpec
from .verification import KKTReport, borch_check, brute_force_oracle, kkt_verify

__version__ = "0.1.0"

_ESTIMATORS = ("CaraLimitedLiability", "GeneralLimitedLiability", "RiskSharingContract")


def __getattr__(name):
    # scikit-learn is slow to import; only pay for it when an estimator is used
    if name in _ESTIMATORS:
        from . import estimators
        return getattr(estimators, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")

__all__ = [
    "CaraLimitedLiability", "CaraSolution", "ConvergenceError", "GeneralLimitedLiability",
    "GeneralSolution", "GridTooLargeError", "InfeasibleProblemError", "KKTReport", "Multipliers",
    "NoInteriorStatesError", "PactSolveError", "Parametric", "ProblemSpec", "ProblemValidationError",
    "RiskSharingContract", "ShockGrid", "SolverConfig", "StateWise", "UnsupportedProblemError",
    "UtilityKind", "UtilitySpec", "agent_value", "borch_check", "brute_force_oracle",
    "cara_ll_solve", "custom", "gauss_hermite", "general_ll_solve", "gradient", "is_feasible",
    "kkt_verify", "pc_residual", "perturbation_path", "perturbed_solve", "principal_value",
    "rs_solve", "second_moment_bound", "uniform", "wage_curve",
]
