"""Problem instances, contracts, and the two expected-utility functionals.

Output is ``X^a = x0 + a + B`` and the effort cost is ``K a^2 / 2``.  Every
expectation is a finite sum over the shock grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ._roots import increasing_root
from .exceptions import (
    InfeasibleProblemError,
    ProblemValidationError,
    UnsupportedProblemError,
)
from .shock import ShockGrid
from .utility import UtilityKind, UtilitySpec


def _finite(name, value):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ProblemValidationError(f"{name} must be a number", field=name) from None
    if not math.isfinite(value):
        raise ProblemValidationError(f"{name} must be finite", field=name)
    return value


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A full limited-liability risk-sharing instance.

    ``M=None`` means one-sided limited liability.  ``y > M`` is accepted
    here; the solvers report it as infeasible.
    """

    x0: float
    K: float
    y: float
    m: float
    M: Optional[float]
    principal: UtilitySpec
    agent: UtilitySpec
    shock: ShockGrid

    def __post_init__(self):
        for name in ("x0", "K", "y", "m"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        if self.M is not None:
            object.__setattr__(self, "M", _finite("M", self.M))
        if self.K <= 0:
            raise ProblemValidationError("K > 0 required", field="K")
        if self.y < 0:
            raise ProblemValidationError("y ≥ 0 required", field="y")
        if self.m > self.y:
            raise ProblemValidationError("m ≤ y required", field="m")
        if self.M is not None and not self.m < self.M:
            raise ProblemValidationError("m < M required", field="M")
        if not isinstance(self.principal, UtilitySpec) or not isinstance(self.agent, UtilitySpec):
            raise ProblemValidationError("utilities must be UtilitySpec", field="principal")
        if not isinstance(self.shock, ShockGrid):
            raise ProblemValidationError("shock must be a ShockGrid", field="shock")

    @property
    def one_sided(self):
        return self.M is None

    @property
    def upper(self):
        return math.inf if self.M is None else self.M

    @property
    def probs(self):
        return self.shock.probs

    def kappa(self, a):
        return 0.5 * self.K * a * a

    def kappa_prime(self, a):
        return self.K * a

    def outputs(self, a):
        return self.x0 + a + self.shock.atoms

    def reservation_utility(self):
        return float(self.agent.value(self.y))

    def replace(self, **changes):
        fields = dict(x0=self.x0, K=self.K, y=self.y, m=self.m, M=self.M,
                      principal=self.principal, agent=self.agent, shock=self.shock)
        fields.update(changes)
        return ProblemSpec(**fields)

    def to_dict(self):
        d = {"x0": self.x0, "K": self.K, "y": self.y, "m": self.m}
        if self.M is not None:
            d["M"] = self.M
        d["principal"] = self.principal.to_dict()
        d["agent"] = self.agent.to_dict()
        d["shock"] = self.shock.to_dict()
        return d

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ProblemValidationError("problem must be a JSON object")
        required = ("x0", "K", "y", "m", "principal", "agent", "shock")
        for key in required:
            if key not in data:
                raise ProblemValidationError(f"missing field {key!r}", field=key)
        extra = set(data) - set(required) - {"M"}
        if extra:
            raise ProblemValidationError(f"unexpected fields {sorted(extra)}", field=sorted(extra)[0])
        return cls(
            x0=data["x0"], K=data["K"], y=data["y"], m=data["m"], M=data.get("M"),
            principal=UtilitySpec.from_dict(data["principal"]),
            agent=UtilitySpec.from_dict(data["agent"]),
            shock=ShockGrid.from_dict(data["shock"]),
        )


@dataclass(frozen=True)
class Parametric:
    """Truncated linear wage ``clamp(rho * X^a + beta, m, M)``.

    With ``clamped=False`` the bounds are ignored (risk-sharing benchmark).
    """

    rho: float
    beta: float
    a: float
    clamped: bool = True

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ProblemValidationError("rho must lie in [0, 1]", field="rho")
        if not self.a >= 0.0:
            raise ProblemValidationError("action must be nonnegative", field="a")

    def wage_at(self, x, m=-math.inf, M=math.inf):
        w = self.rho * np.asarray(x, dtype=float) + self.beta
        if self.clamped:
            w = np.clip(w, m, M)
        return w

    def wage_vector(self, p):
        return self.wage_at(p.outputs(self.a), p.m, p.upper)

    def to_dict(self):
        return {"type": "parametric", "rho": self.rho, "beta": self.beta,
                "a": self.a, "clamped": self.clamped}


@dataclass(frozen=True, eq=False)
class StateWise:
    """One wage per shock atom, plus the action."""

    wages: np.ndarray
    a: float

    def __post_init__(self):
        w = np.array(self.wages, dtype=float).reshape(-1)
        w.flags.writeable = False
        object.__setattr__(self, "wages", w)
        object.__setattr__(self, "a", float(self.a))
        if not self.a >= 0.0:
            raise ProblemValidationError("action must be nonnegative", field="a")

    def wage_vector(self, p):
        if self.wages.size != p.shock.n:
            raise ProblemValidationError(
                f"contract has {self.wages.size} wages for {p.shock.n} atoms", field="wages"
            )
        return self.wages

    def to_dict(self):
        return {"type": "statewise", "wages": self.wages.tolist(), "a": self.a}


Contract = Union[Parametric, StateWise]


def contract_from_dict(data):
    kind = data.get("type")
    if kind == "parametric":
        return Parametric(float(data["rho"]), float(data["beta"]), float(data["a"]),
                          bool(data.get("clamped", True)))
    if kind == "statewise":
        return StateWise(data["wages"], data["a"])
    raise ProblemValidationError(f"unknown contract type {kind!r}", field="contract.type")


@dataclass(frozen=True, eq=False)
class Multipliers:
    """KKT multipliers: participation ``lam``, lower ``z`` and upper ``y_mult``."""

    lam: float
    z: np.ndarray
    y_mult: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float))
        object.__setattr__(self, "y_mult", np.asarray(self.y_mult, dtype=float))
        if self.lam < 0 or np.any(self.z < 0) or np.any(self.y_mult < 0):
            raise ProblemValidationError("multipliers must be nonnegative", field="multipliers")

    def to_dict(self):
        return {"lambda": self.lam, "z": self.z.tolist(), "y": self.y_mult.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(data["lambda"], data["z"], data["y"])


def principal_value(p, c):
    w = c.wage_vector(p)
    return p.shock.expect(p.principal.value(p.outputs(c.a) - w))


def agent_value(p, c):
    w = c.wage_vector(p)
    return p.shock.expect(p.agent.value(w - p.kappa(c.a)))


def pc_residual(p, c):
    """Participation slack ``E[u_A(W - kappa)] - u_A(y)``."""
    return agent_value(p, c) - p.reservation_utility()


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of a feasibility check; truthy when feasible."""

    feasible: bool
    pc_ok: bool
    bounds_ok: bool
    pc_slack: float
    bound_violation: float
    worst_state: Optional[int]

    def __bool__(self):
        return self.feasible

    def to_dict(self):
        return {"feasible": self.feasible, "pc_ok": self.pc_ok, "bounds_ok": self.bounds_ok,
                "pc_slack": self.pc_slack, "bound_violation": self.bound_violation,
                "worst_state": self.worst_state}


def is_feasible(p, c, tol=1e-9):
    """Bounds within ``tol`` and participation slack at least ``-tol``.

    ``worst_state`` is the atom index with the largest bound violation.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    w = c.wage_vector(p)
    excess = np.maximum(p.m - w, w - p.upper)
    worst = int(np.argmax(excess))
    violation = max(float(excess[worst]), 0.0)
    slack = pc_residual(p, c)
    bounds_ok = violation <= tol
    pc_ok = slack >= -tol
    return FeasibilityReport(bounds_ok and pc_ok, pc_ok, bounds_ok, slack, violation,
                             worst if violation > 0 else None)


def state_multipliers(p, wages, a, lam):
    """Split ``u_P'(X - w) - lam u_A'(w - kappa)`` into lower/upper parts."""
    r = p.principal.deriv(p.outputs(a) - wages) - lam * p.agent.deriv(wages - p.kappa(a))
    z = np.maximum(r, 0.0)
    y_mult = np.maximum(-r, 0.0)
    if p.one_sided:
        y_mult = np.zeros_like(r)
    return Multipliers(lam, z, y_mult)


def action_cap(p):
    """Generous upper end of the action search box."""
    spread = float(np.max(np.abs(p.shock.atoms)))
    return max(10.0 / p.K, 10.0 + 2.0 * (p.y + abs(p.x0) + spread))


def check_reachable(p):
    """Raise if no action lets the wage cap satisfy the participation constraint."""
    if p.M is not None and p.M < p.y:
        raise InfeasibleProblemError(
            f"participation unreachable: u_A(M - kappa(a)) < u_A(y) for every a (M={p.M:g} < y={p.y:g})"
        )


def rs_solve(p):
    """Risk-sharing benchmark, wage bounds ignored.

    CARA/CARA: slope ``gP/(gP+gA)``, action ``1/K`` and the intercept that
    binds participation.  Risk-neutral principal: constant wage
    ``y + kappa(1/K)``.
    """
    a = 1.0 / p.K
    kap = p.kappa(a)
    if p.principal.kind is UtilityKind.RISK_NEUTRAL:
        return Parametric(0.0, p.y + kap, a, clamped=False)
    if not (p.principal.is_cara and p.agent.is_cara):
        raise UnsupportedProblemError(
            f"risk-sharing benchmark needs CARA/CARA or a risk-neutral principal, "
            f"got {p.principal}/{p.agent}"
        )
    gp, ga = p.principal.gamma, p.agent.gamma
    rho = gp / (gp + ga)
    x = p.outputs(a)
    target = p.reservation_utility()

    def residual(beta):
        return p.shock.expect(p.agent.value(rho * x + beta - kap)) - target

    center = p.y + kap - rho * (p.x0 + a)
    beta = increasing_root(residual, center - 50.0 / ga, center + 50.0 / ga)
    return Parametric(rho, beta, a, clamped=False)
