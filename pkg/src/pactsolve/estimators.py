"""scikit-learn style wrappers around the solvers.

``fit`` takes a :class:`~pactsolve.model.ProblemSpec` (or its dict form) and
``predict`` maps realised outputs ``x`` to wages.  Hyper-parameters follow
the usual ``get_params``/``set_params`` protocol, so estimators can be cloned.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .cara_solver import ACTION_XTOL, GRID_INTERVALS, cara_ll_solve
from .exceptions import ProblemValidationError
from .general_solver import SolverConfig, general_ll_solve
from .model import ProblemSpec, rs_solve
from .verification import kkt_verify


def check_problem(problem):
    """Accept a ProblemSpec or its JSON-ready dict."""
    if isinstance(problem, ProblemSpec):
        return problem
    if isinstance(problem, dict):
        return ProblemSpec.from_dict(problem)
    raise ProblemValidationError(f"expected ProblemSpec or dict, got {type(problem).__name__}")


def _outputs(x):
    return check_array(x, ensure_2d=False, dtype=np.float64).reshape(-1)


class RiskSharingContract(BaseEstimator):
    """Unconstrained risk-sharing benchmark (wage bounds ignored)."""

    def fit(self, problem, y=None):
        p = check_problem(problem)
        self.contract_ = rs_solve(p)
        self.a_ = self.contract_.a
        self.beta_ = self.contract_.beta
        self.rho_ = self.contract_.rho
        return self

    def predict(self, x):
        check_is_fitted(self, "contract_")
        return np.asarray(self.contract_.wage_at(_outputs(x)), dtype=float)


class CaraLimitedLiability(BaseEstimator):
    """Clamped-linear optimum for CARA principal and agent."""

    def __init__(self, grid_intervals=GRID_INTERVALS, action_xtol=ACTION_XTOL):
        self.grid_intervals = grid_intervals
        self.action_xtol = action_xtol

    def fit(self, problem, y=None):
        p = check_problem(problem)
        if int(self.grid_intervals) < 2:
            raise ValueError("grid_intervals must be at least 2")
        sol = cara_ll_solve(p, grid_intervals=int(self.grid_intervals),
                            action_xtol=float(self.action_xtol))
        self.problem_ = p
        self.solution_ = sol
        self.a_ = sol.a
        self.beta_ = sol.beta
        self.rho_ = sol.rho
        self.lambda_ = sol.lam
        self.value_ = sol.value
        return self

    def predict(self, x):
        check_is_fitted(self, "solution_")
        return np.asarray(self.solution_.wage(_outputs(x)), dtype=float)

    def kkt_report(self, tol=1e-8):
        check_is_fitted(self, "solution_")
        p = self.problem_
        return kkt_verify(p, self.solution_.contract, self.solution_.multipliers(p), tol)


class GeneralLimitedLiability(BaseEstimator):
    """State-wise optimum for any supported utility pair.

    ``predict`` interpolates the state wages linearly in output and holds
    them constant beyond the extreme atoms.
    """

    def __init__(self, max_outer_iters=50, penalty_growth=10.0, kkt_tol=1e-8,
                 step_shrink=0.5, a_bracket=None, max_inner_iters=10_000):
        self.max_outer_iters = max_outer_iters
        self.penalty_growth = penalty_growth
        self.kkt_tol = kkt_tol
        self.step_shrink = step_shrink
        self.a_bracket = a_bracket
        self.max_inner_iters = max_inner_iters

    def _config(self):
        return SolverConfig(
            max_outer_iters=int(self.max_outer_iters),
            penalty_growth=float(self.penalty_growth),
            kkt_tol=float(self.kkt_tol),
            step_shrink=float(self.step_shrink),
            a_bracket=self.a_bracket,
            max_inner_iters=int(self.max_inner_iters),
        )

    def fit(self, problem, y=None):
        p = check_problem(problem)
        sol = general_ll_solve(p, self._config())
        self.problem_ = p
        self.solution_ = sol
        self.wages_ = sol.wages
        self.a_ = sol.a
        self.lambda_ = sol.multipliers.lam
        self.z_ = sol.multipliers.z
        self.y_mult_ = sol.multipliers.y_mult
        self.value_ = sol.value
        self.outputs_ = p.outputs(sol.a)
        return self

    def predict(self, x):
        check_is_fitted(self, "solution_")
        return np.interp(_outputs(x), self.outputs_, self.wages_)

    def kkt_report(self):
        check_is_fitted(self, "solution_")
        return self.solution_.kkt
