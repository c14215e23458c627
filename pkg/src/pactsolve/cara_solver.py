"""Limited-liability contracts for a CARA principal and a CARA agent.

For a fixed action the optimal wage is the Borch-rule wage clamped to the
bounds, which is linear in output with slope ``gP / (gP + gA)``.  The solver
therefore searches one intercept per action (binding participation) and a
single action.  ``perturbed_solve`` follows the ``eps * E[U_P(-W)]``
regularisation path instead, wage by wage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import logsumexp

from ._roots import increasing_root
from .exceptions import (
    BracketError,
    ConvergenceError,
    ProblemValidationError,
    UnsupportedProblemError,
)
from .model import (
    Multipliers,
    Parametric,
    StateWise,
    action_cap,
    check_reachable,
    principal_value,
    pc_residual,
    state_multipliers,
)

GRID_INTERVALS = 400
ACTION_XTOL = 1e-6
FEASIBILITY_TOL = 1e-9


def _require_cara(p):
    if not (p.principal.is_cara and p.agent.is_cara):
        raise UnsupportedProblemError(
            f"CARA solver needs CARA utilities on both sides, got {p.principal}/{p.agent}"
        )
    return p.principal.gamma, p.agent.gamma


@dataclass
class CaraSolution:
    contract: Parametric
    lam: float
    value: float
    pc_residual: float
    feasible: bool
    m: float
    M: float | None
    diagnostics: dict = field(default_factory=dict)

    @property
    def a(self):
        return self.contract.a

    @property
    def beta(self):
        return self.contract.beta

    @property
    def rho(self):
        return self.contract.rho

    def wage(self, x):
        upper = math.inf if self.M is None else self.M
        return self.contract.wage_at(x, self.m, upper)

    def multipliers(self, p):
        return state_multipliers(p, self.contract.wage_vector(p), self.a, self.lam)

    def to_dict(self):
        return {
            "solver": "cara",
            "contract": self.contract.to_dict(),
            "lambda": self.lam,
            "value": self.value,
            "pc_residual": self.pc_residual,
            "feasible": self.feasible,
            "diagnostics": self.diagnostics,
        }


class _Family:
    """Clamped-linear wages for one problem; beta(a) binds participation."""

    def __init__(self, p):
        self.p = p
        self.gp, self.ga = _require_cara(p)
        self.rho = self.gp / (self.gp + self.ga)
        self.target = p.reservation_utility()

    def wages(self, a, beta):
        return np.clip(self.rho * self.p.outputs(a) + beta, self.p.m, self.p.upper)

    def beta(self, a):
        p, rho = self.p, self.rho
        x = p.outputs(a)
        kap = p.kappa(a)

        def residual(beta):
            w = np.clip(rho * x + beta, p.m, p.upper)
            return p.shock.expect(p.agent.value(w - kap)) - self.target

        lo = p.m - rho * x.max()
        # every wage at m already participates only when m = y and a = 0
        if residual(lo) >= 0.0:
            return lo
        if p.M is not None:
            hi = p.M - rho * x.min()
            # all wages at M: at the top of the action range the constraint
            # binds exactly and rounding may leave it a few ulps short
            if residual(hi) <= 0.0:
                return hi
        else:
            hi = p.y + kap - rho * (p.x0 + a) + 50.0 / self.ga
        return increasing_root(residual, lo, max(hi, lo + 1.0))

    def value(self, a):
        beta = self.beta(a)
        w = self.wages(a, beta)
        return self.p.shock.expect(self.p.principal.value(self.p.outputs(a) - w))

    def lam(self, a, beta):
        # intercept relation of the clamped Borch wage
        return (self.gp / self.ga) * math.exp((self.gp + self.ga) * beta - self.ga * self.p.kappa(a))

    def stationarity(self, a):
        """Derivative of the value along the family (envelope form)."""
        p = self.p
        beta = self.beta(a)
        w = self.wages(a, beta)
        lam = self.lam(a, beta)
        up = p.shock.expect(p.principal.deriv(p.outputs(a) - w))
        ua = p.shock.expect(p.agent.deriv(w - p.kappa(a)))
        return up - lam * p.kappa_prime(a) * ua


def cara_ll_solve(p, *, grid_intervals=GRID_INTERVALS, action_xtol=ACTION_XTOL):
    """Optimal clamped-linear contract for a CARA/CARA instance.

    The action is located on a uniform grid over ``[0, a_max]``, refined by
    bounded Brent/golden search on the best bracket, then polished by
    solving the action stationarity condition on that bracket.
    """
    fam = _Family(p)
    check_reachable(p)
    a_max = action_cap(p)
    a_hi = a_max
    if p.M is not None:
        a_hi = min(a_hi, math.sqrt(2.0 * (p.M - p.y) / p.K))

    grid = np.linspace(0.0, a_hi, grid_intervals + 1)
    values = np.array([fam.value(a) for a in grid])
    k = int(np.argmax(values))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]

    a_star = grid[k]
    if hi > lo:
        res = minimize_scalar(lambda a: -fam.value(a), bounds=(lo, hi), method="bounded",
                              options={"xatol": action_xtol})
        if -res.fun >= values[k]:
            a_star = float(res.x)
        polished = _polish_action(fam, lo, hi)
        if polished is not None and fam.value(polished) >= fam.value(a_star) - 1e-15 * abs(values[k]):
            a_star = polished

    beta = fam.beta(a_star)
    contract = Parametric(fam.rho, beta, a_star, clamped=True)
    slack = pc_residual(p, contract)
    w = contract.wage_vector(p)
    diagnostics = {
        "a_max": a_max,
        "a_search_hi": a_hi,
        "grid_argmax": float(grid[k]),
        "action_box_binding": bool(k == grid.size - 1),
        "stationarity": fam.stationarity(a_star) if a_star > 0 else None,
        "saturated": bool(np.any(p.principal.saturated(p.outputs(a_star) - w))
                          or np.any(p.agent.saturated(w - p.kappa(a_star)))),
        "interior_mass": float(p.shock.expect((w > p.m) & (w < p.upper))),
    }
    return CaraSolution(
        contract=contract,
        lam=fam.lam(a_star, beta),
        value=principal_value(p, contract),
        pc_residual=slack,
        feasible=abs(slack) <= FEASIBILITY_TOL,
        m=p.m,
        M=p.M,
        diagnostics=diagnostics,
    )


def _polish_action(fam, lo, hi):
    lo = max(lo, 1e-12)
    try:
        glo, ghi = fam.stationarity(lo), fam.stationarity(hi)
    except BracketError:
        return None
    if not (glo > 0.0 > ghi):
        return None
    return brentq(fam.stationarity, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=200)


def wage_curve(sol, x_lo, x_hi, n):
    """Evenly spaced ``(x, wage)`` samples of a parametric solution."""
    if not x_lo < x_hi:
        raise ValueError("wage_curve needs x_lo < x_hi")
    if n < 2:
        raise ValueError("wage_curve needs n >= 2")
    x = np.linspace(x_lo, x_hi, n)
    return x, np.asarray(sol.wage(x), dtype=float)


# --- epsilon-perturbation path ---------------------------------------------------

@dataclass
class PerturbedSolution:
    contract: StateWise
    lam: float
    z: np.ndarray
    epsilon: float
    value: float
    objective: float
    pc_residual: float
    stationarity: float
    second_moment: float

    @property
    def a(self):
        return self.contract.a

    @property
    def multipliers(self):
        return Multipliers(self.lam, self.z, np.zeros_like(self.z))

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "contract": self.contract.to_dict(),
            "lambda": self.lam,
            "z": self.z.tolist(),
            "value": self.value,
            "objective": self.objective,
            "pc_residual": self.pc_residual,
            "stationarity": self.stationarity,
            "second_moment": self.second_moment,
        }


class _Perturbed:
    def __init__(self, p, epsilon):
        if p.M is not None:
            raise UnsupportedProblemError("perturbation path is defined for one-sided problems")
        if not 0.0 < epsilon < 1.0:
            raise ProblemValidationError("epsilon must lie in (0, 1)", field="epsilon")
        self.p = p
        self.gp, self.ga = _require_cara(p)
        self.eps = epsilon
        self.log_eps = math.log(epsilon)
        self.logp = np.log(p.shock.probs)

    def wages(self, a, s):
        """Per-state root of the perturbed first-order condition, clamped at m.

        ``s`` is log(lambda).
        """
        gp, ga = self.gp, self.ga
        x = self.p.outputs(a)
        tail = np.logaddexp(-gp * x, self.log_eps)
        w = (math.log(ga / gp) + s + ga * self.p.kappa(a) - tail) / (gp + ga)
        return np.maximum(w, self.p.m)

    def log_pc(self, a, s):
        """log E[exp(-gA (W - kappa))] + gA y; zero when participation binds."""
        w = self.wages(a, s)
        return logsumexp(self.logp - self.ga * (w - self.p.kappa(a))) + self.ga * self.p.y

    def log_lambda(self, a, guess=None):
        gp, ga, p = self.gp, self.ga, self.p
        if guess is None:
            kap = p.kappa(a)
            guess = (gp + ga) * (p.y + kap) - ga * kap + math.log(gp / ga) - gp * (p.x0 + a)
        return increasing_root(lambda s: -self.log_pc(a, s), guess - 1.0, guess + 1.0)

    def action_residual(self, a, s):
        """log of principal-side over agent-side marginal value of effort."""
        gp, ga, p = self.gp, self.ga, self.p
        w = self.wages(a, s)
        lhs = math.log(gp) + logsumexp(self.logp - gp * (p.outputs(a) - w))
        rhs = s + math.log(ga * p.kappa_prime(a)) + logsumexp(self.logp - ga * (w - p.kappa(a)))
        return lhs - rhs


def perturbed_solve(p, epsilon, *, warm_start=None, max_iter=200):
    """Maximise ``E[U_P(X - W)] + eps E[U_P(-W)]`` over one-sided contracts.

    Nested monotone solves: closed-form wages for fixed (lambda, a),
    lambda binding participation, then the action from its stationarity
    condition.  ``warm_start`` is a previous ``PerturbedSolution``.
    """
    pert = _Perturbed(p, epsilon)
    cache = {}

    def s_of(a):
        if a not in cache:
            guess = cache[min(cache, key=lambda b: abs(b - a))] if cache else None
            if guess is None and warm_start is not None:
                guess = math.log(warm_start.lam)
            cache[a] = pert.log_lambda(a, guess)
        return cache[a]

    def neg_residual(a):
        return -pert.action_residual(a, s_of(a))

    a_guess = warm_start.a if warm_start is not None else 1.0 / p.K
    width = 0.1 * max(a_guess, 1.0 / p.K)
    try:
        a_star = increasing_root(neg_residual, a_guess - width, a_guess + width,
                                 floor=1e-12, max_expand=max_iter)
    except BracketError as exc:
        raise ConvergenceError(f"perturbed action not bracketed at eps={epsilon:g}: {exc}") from exc

    s = s_of(a_star)
    w = pert.wages(a_star, s)
    gp, ga = pert.gp, pert.ga
    x = p.outputs(a_star)
    lam = math.exp(s)
    at_floor = w <= p.m
    z = np.zeros_like(w)
    if np.any(at_floor):
        wm = w[at_floor]
        z[at_floor] = np.maximum(
            gp * np.exp(-gp * (x[at_floor] - wm)) + epsilon * gp * np.exp(gp * wm)
            - lam * ga * np.exp(-ga * (wm - p.kappa(a_star))),
            0.0,
        )
    contract = StateWise(w, a_star)
    value = principal_value(p, contract)
    penalty = p.shock.expect(p.principal.value(-w))
    return PerturbedSolution(
        contract=contract,
        lam=lam,
        z=z,
        epsilon=epsilon,
        value=value,
        objective=value + epsilon * penalty,
        pc_residual=pc_residual(p, contract),
        stationarity=pert.action_residual(a_star, s),
        second_moment=p.shock.expect(w * w),
    )


def perturbation_path(p, n_max=20):
    """Solutions for ``eps = 2**-1 ... 2**-n_max``, each warm-started."""
    path = []
    prev = None
    for n in range(1, n_max + 1):
        prev = perturbed_solve(p, 2.0 ** -n, warm_start=prev)
        path.append(prev)
    return path


def second_moment_bound(p, a_max=None):
    """Upper bound on ``E[W_eps^2]`` valid for every ``0 < eps < 1``.

    Evaluated in log space; ``a_max`` defaults to :func:`action_cap`.
    """
    gp, ga = _require_cara(p)
    if a_max is None:
        a_max = action_cap(p)
    logp = np.log(p.shock.probs)
    x0 = p.outputs(0.0)
    xmax = p.outputs(a_max)
    # lambda bound from the feasible anchor (y, 0)
    log_c = (math.log(gp) + logsumexp(np.concatenate([logp - gp * (x0 - p.y), [gp * p.y]]))
             - math.log(ga) + ga * p.y)
    num = np.logaddexp(
        np.logaddexp(math.log(gp) - gp * (x0 - p.m), math.log(gp) + gp * p.m),
        log_c - ga * (p.m - p.kappa(a_max)),
    )
    den = math.log(gp) - gp * xmax
    return p.shock.expect(((num - den) / gp) ** 2)
