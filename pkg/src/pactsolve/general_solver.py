"""State-wise solver for arbitrary supported utilities.

Maximises ``sum_i p_i u_P(x0 + a + b_i - w_i)`` over the wage vector and the
action, subject to participation and the wage box.  Participation is handled
by an augmented Lagrangian; each subproblem is solved by spectral projected
gradient ascent with a nonmonotone Armijo search.  Gradients are taken in
the probability-weighted inner product, so the wage direction for state i is
the pointwise marginal ``-u_P'(X_i - w_i) + mu u_A'(w_i - kappa)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from scipy.optimize import brentq

from ._roots import increasing_root
from .exceptions import BracketError, ConvergenceError, InfeasibleProblemError
from .utility import UtilityKind
from .model import (
    Multipliers,
    StateWise,
    action_cap,
    check_reachable,
    principal_value,
    state_multipliers,
)

PROXIMAL = 1e-10


@dataclass
class SolverConfig:
    max_outer_iters: int = 50
    penalty_growth: float = 10.0
    kkt_tol: float = 1e-8
    step_shrink: float = 0.5
    a_bracket: tuple | None = None
    max_inner_iters: int = 10_000
    initial_penalty: float = 10.0
    armijo: float = 1e-4
    memory: int = 10
    polish: bool = True
    polish_start: float = 1e-3

    def __post_init__(self):
        if not self.kkt_tol > 0:
            raise ValueError("kkt_tol must be positive")
        if not self.penalty_growth > 1:
            raise ValueError("penalty_growth must exceed 1")
        if not 0 < self.step_shrink < 1:
            raise ValueError("step_shrink must lie in (0, 1)")


@dataclass
class GeneralSolution:
    contract: StateWise
    multipliers: Multipliers
    value: float
    kkt: object
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)

    @property
    def wages(self):
        return self.contract.wages

    @property
    def a(self):
        return self.contract.a

    def to_dict(self):
        return {
            "solver": "general",
            "contract": self.contract.to_dict(),
            "multipliers": self.multipliers.to_dict(),
            "value": self.value,
            "converged": self.converged,
            "kkt": self.kkt.to_dict() if self.kkt is not None else None,
            "diagnostics": self.diagnostics,
        }


def objective_gradient(p, w, a):
    """Gradient of ``E[u_P(X^a - W)]`` in plain coordinates."""
    up = p.principal.deriv(p.outputs(a) - w)
    return -p.probs * up, float(np.dot(p.probs, up))


def pc_gradient(p, w, a):
    """Gradient of ``E[u_A(W - kappa(a))]`` in plain coordinates."""
    ua = p.agent.deriv(w - p.kappa(a))
    return p.probs * ua, -p.kappa_prime(a) * float(np.dot(p.probs, ua))


def gradient(p, w, a):
    """Objective and participation gradients: ``((dw_f, da_f), (dw_g, da_g))``."""
    return objective_gradient(p, w, a), pc_gradient(p, w, a)


class _Lagrangian:
    def __init__(self, p, lam, c):
        self.p = p
        self.lam = lam
        self.c = c
        self.target = p.reservation_utility()

    def pc(self, w, a):
        return float(np.dot(self.p.probs, self.p.agent.value(w - self.p.kappa(a)))) - self.target

    def value(self, w, a):
        p = self.p
        f = float(np.dot(p.probs, p.principal.value(p.outputs(a) - w) - 0.5 * PROXIMAL * w * w))
        g = self.pc(w, a)
        shifted = max(0.0, self.lam - self.c * g)
        return f - (shifted * shifted - self.lam * self.lam) / (2.0 * self.c)

    def grad(self, w, a):
        """Returns (value, raw gradient in w, gradient in a, multiplier estimate)."""
        p = self.p
        x = p.outputs(a)
        kap = p.kappa(a)
        up = p.principal.deriv(x - w)
        ua = p.agent.deriv(w - kap)
        g = float(np.dot(p.probs, p.agent.value(w - kap))) - self.target
        mu = max(0.0, self.lam - self.c * g)
        f = float(np.dot(p.probs, p.principal.value(x - w) - 0.5 * PROXIMAL * w * w))
        val = f - (mu * mu - self.lam * self.lam) / (2.0 * self.c)
        # pointwise (Riesz) wage gradient; the raw one is p times this
        dw = -up - PROXIMAL * w + mu * ua
        da = float(np.dot(p.probs, up)) - mu * p.kappa_prime(a) * float(np.dot(p.probs, ua))
        return val, dw, da, mu


def _project(w, a, lo, hi, a_hi):
    return np.clip(w, lo, hi), min(max(a, 0.0), a_hi)


def _spg(lag, w, a, box, tol, cfg):
    """Spectral projected gradient ascent on the augmented Lagrangian."""
    p = lag.p
    lo, hi, a_hi = box
    val, dw, da, mu = lag.grad(w, a)
    history = [val]
    # first step moves the largest coordinate by at most one unit
    step = 1.0 / max(1.0, float(np.max(np.abs(dw))), abs(da))
    for it in range(cfg.max_inner_iters):
        pw, pa = _project(w + dw, a + da, lo, hi, a_hi)
        pg = max(float(np.max(np.abs(pw - w))), abs(pa - a))
        if pg <= tol:
            return w, a, mu, it, pg
        ref = max(history[-cfg.memory:])
        t = step
        while True:
            nw, na = _project(w + t * dw, a + t * da, lo, hi, a_hi)
            sw, sa = nw - w, na - a
            ascent = float(np.dot(p.probs, dw * sw)) + da * sa
            nval = lag.value(nw, na)
            # rounding floor: near the optimum value changes drop below ulp(ref)
            noise = 8.0 * np.finfo(float).eps * (abs(ref) + 1.0)
            if nval >= ref + cfg.armijo * ascent - noise:
                break
            move = max(float(np.max(np.abs(sw))), abs(sa))
            if move <= 4.0 * np.finfo(float).eps * (1.0 + float(np.max(np.abs(w))) + a):
                # no representable ascent step left
                return w, a, mu, it, pg
            t *= cfg.step_shrink
        nval, ndw, nda, mu = lag.grad(nw, na)
        # Barzilai-Borwein step in the probability-weighted metric
        ss = float(np.dot(p.probs, sw * sw)) + sa * sa
        sy = float(np.dot(p.probs, sw * (ndw - dw))) + sa * (nda - da)
        step = min(max(ss / -sy, 1e-12), 1e12) if sy < 0 else 1e12 if ss > 0 else 1.0
        w, a, dw, da, val = nw, na, ndw, nda, nval
        history.append(val)
    pw, pa = _project(w + dw, a + da, lo, hi, a_hi)
    pg = max(float(np.max(np.abs(pw - w))), abs(pa - a))
    return w, a, mu, cfg.max_inner_iters, pg


# --- reduced-system polish ----------------------------------------------------
#
# For fixed (lam, a) the wage conditions decouple by state: the marginal
# gap h(w) = u_P'(X - w) - lam u_A'(w - kappa) is nondecreasing in w, so the
# optimal wage is its root clamped to the box.  Binding participation then
# pins lam, and stationarity in a closes the system.

def borch_wages(p, a, lam, max_iter=200):
    """State-wise wages solving ``u_P'(X - w) = lam u_A'(w - kappa)`` within the box."""
    x = p.outputs(a)
    kap = p.kappa(a)

    def h(w, idx):
        return p.principal.deriv(x[idx] - w) - lam * p.agent.deriv(w - kap)

    def dh(w, idx):
        return -p.principal.deriv2(x[idx] - w) - lam * p.agent.deriv2(w - kap)

    n = x.size
    all_idx = np.arange(n)
    w = np.full(n, p.m)
    free = h(w, all_idx) < 0.0
    if not p.one_sided:
        top = free & (h(np.full(n, p.M), all_idx) <= 0.0)
        w[top] = p.M
        free &= ~top
    idx = np.flatnonzero(free)
    if idx.size == 0:
        return w
    lo = np.full(idx.size, p.m)
    if p.one_sided:
        hi = lo + 1.0
        step = 1.0
        for _ in range(200):
            neg = h(hi, idx) < 0.0
            if not np.any(neg):
                break
            lo = np.where(neg, hi, lo)
            step *= 2.0
            hi = np.where(neg, hi + step, hi)
        else:
            raise BracketError("marginal gap never changes sign below the wage cap")
    else:
        hi = np.full(idx.size, p.M)
    cur = 0.5 * (lo + hi)
    for _ in range(max_iter):
        hv = h(cur, idx)
        lo = np.where(hv < 0.0, cur, lo)
        hi = np.where(hv > 0.0, cur, hi)
        d = dh(cur, idx)
        with np.errstate(divide="ignore", invalid="ignore"):
            nxt = cur - hv / d
        bad = ~np.isfinite(nxt) | (nxt <= lo) | (nxt >= hi)
        nxt = np.where(bad, 0.5 * (lo + hi), nxt)
        done = (hv == 0.0) | (hi - lo <= 4.0 * np.finfo(float).eps * (1.0 + np.abs(cur)))
        nxt = np.where(hv == 0.0, cur, nxt)
        if np.all(done) or np.all(np.abs(nxt - cur) <= 2.0 * np.finfo(float).eps * (1.0 + np.abs(cur))):
            cur = nxt
            break
        cur = nxt
    w[idx] = cur
    return w


def _binding_lambda(p, a, s_guess):
    """log-multiplier making participation bind at action ``a``."""
    target = p.reservation_utility()
    kap = p.kappa(a)

    def slack(s):
        # clamped so an unreachable constraint ends in BracketError, not overflow
        w = borch_wages(p, a, math.exp(min(max(s, -700.0), 700.0)))
        return float(np.dot(p.probs, p.agent.value(w - kap))) - target

    s = increasing_root(slack, s_guess - 1.0, s_guess + 1.0, xtol=1e-15)
    return s, borch_wages(p, a, math.exp(s))


def polish(p, a0, lam0, a_hi):
    """Solve the reduced system from ``(a0, lam0)``; returns ``(w, a, lam)``.

    Raises :class:`BracketError` when no sign change is found near the
    starting point.
    """
    if (p.principal.kind is UtilityKind.RISK_NEUTRAL
            and p.agent.kind is UtilityKind.RISK_NEUTRAL):
        raise BracketError("no curvature to polish on")
    state = {"s": math.log(lam0)}

    def station(a):
        s, w = _binding_lambda(p, a, state["s"])
        state["s"] = s
        up = p.principal.deriv(p.outputs(a) - w)
        ua = p.agent.deriv(w - p.kappa(a))
        return float(np.dot(p.probs, up)) - math.exp(s) * p.kappa_prime(a) * float(np.dot(p.probs, ua))

    g0 = station(a0)
    if g0 == 0.0:
        a = a0
    else:
        # stationarity is positive at a = 0; walk outward for a sign change
        delta = max(1e-6, 1e-4 * a0)
        lo, hi = a0, a0
        for _ in range(60):
            if g0 > 0:
                lo, hi = hi, min(hi + delta, a_hi)
                ghi = station(hi)
                if ghi <= 0:
                    break
                if hi >= a_hi:
                    raise BracketError("stationarity positive up to the action cap")
            else:
                hi, lo = lo, max(lo - delta, 0.0)
                glo = station(lo)
                if glo >= 0:
                    break
            delta *= 2.0
        else:
            raise BracketError("no stationarity sign change near the starting action")
        a = brentq(station, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    s, w = _binding_lambda(p, a, state["s"])
    return w, a, math.exp(s)


def extract_multipliers(p, w, a, fallback_lam):
    """Multipliers from the first two optimality conditions."""
    x = p.outputs(a)
    up = p.principal.deriv(x - w)
    ua = p.agent.deriv(w - p.kappa(a))
    denom = p.kappa_prime(a) * float(np.dot(p.probs, ua))
    lam = float(np.dot(p.probs, up)) / denom if denom > 0 else fallback_lam
    r = up - lam * ua
    z = np.maximum(r, 0.0)
    y_mult = np.zeros_like(r) if p.one_sided else np.maximum(-r, 0.0)
    return Multipliers(lam, z, y_mult)


def _residuals(p, w, a, mult):
    """Solver-side convergence measures (sup-norm per condition)."""
    x = p.outputs(a)
    kap = p.kappa(a)
    up = p.principal.deriv(x - w)
    ua = p.agent.deriv(w - kap)
    probs = p.probs
    lam, z, y = mult.lam, mult.z, mult.y_mult
    r_a = abs(float(np.dot(probs, up)) - lam * p.kappa_prime(a) * float(np.dot(probs, ua)))
    r_w = float(np.max(np.abs(up - lam * ua - z + y)))
    slack = float(np.dot(probs, p.agent.value(w - kap))) - p.reservation_utility()
    r_pc = abs(lam * slack)
    upper_gap = np.zeros_like(w) if p.one_sided else (p.M - w)
    r_b = abs(float(np.dot(probs, z * (w - p.m)))) + abs(float(np.dot(probs, y * upper_gap)))
    return max(r_a, r_w, r_pc, r_b), slack


def general_ll_solve(p, cfg=None):
    """Solve the discretised limited-liability problem state by state.

    Raises :class:`InfeasibleProblemError` when participation is out of
    reach and :class:`ConvergenceError` (carrying the best iterate as
    ``result``) when the outer iteration cap is hit.
    """
    from .verification import kkt_verify

    cfg = cfg or SolverConfig()
    check_reachable(p)
    lo, hi = p.m, p.upper
    if cfg.a_bracket is not None:
        a_hi = float(cfg.a_bracket[1])
    else:
        a_hi = action_cap(p)
    box = (lo, hi, a_hi)

    w = np.clip(np.full(p.shock.n, p.y), lo, hi)
    a = 0.0
    lam, c = 0.0, cfg.initial_penalty
    prev_violation = math.inf
    inner_total = 0
    best = None
    polished = False
    for outer in range(1, cfg.max_outer_iters + 1):
        lag = _Lagrangian(p, lam, c)
        # with polishing the subproblems only need to reach the polish basin
        inner_tol = cfg.kkt_tol * 0.1
        if cfg.polish:
            inner_tol = max(inner_tol, cfg.polish_start * 1e-2)
        w, a, mu, its, pg = _spg(lag, w, a, box, inner_tol, cfg)
        inner_total += its
        g = lag.pc(w, a)
        violation = abs(min(g, lam / c))
        lam = mu
        mult = extract_multipliers(p, w, a, lam)
        resid, slack = _residuals(p, w, a, mult)
        best = (w.copy(), a, mult, resid, slack, outer)
        if resid <= cfg.kkt_tol and slack >= -cfg.kkt_tol and pg <= cfg.kkt_tol:
            break
        if cfg.polish and lam > 0 and resid <= cfg.polish_start * max(1.0, lam):
            try:
                pw, pa, plam = polish(p, a, lam, a_hi)
            except BracketError:
                pw = None
            if pw is not None:
                pmult = extract_multipliers(p, pw, pa, plam)
                presid, pslack = _residuals(p, pw, pa, pmult)
                if presid <= cfg.kkt_tol and pslack >= -cfg.kkt_tol:
                    w, a, mult, resid, slack, lam = pw, pa, pmult, presid, pslack, plam
                    polished = True
                    break
        if violation > 0.25 * prev_violation:
            c *= cfg.penalty_growth
        prev_violation = violation
    else:
        w, a, mult, resid, slack, outer = best
        contract = StateWise(w, a)
        result = GeneralSolution(contract, mult, principal_value(p, contract),
                                 kkt_verify(p, contract, mult, cfg.kkt_tol), converged=False,
                                 diagnostics={"outer_iters": outer, "inner_iters": inner_total,
                                              "residual": resid, "pc_slack": slack})
        if slack < -1e3 * cfg.kkt_tol and lam > 1e12:
            raise InfeasibleProblemError("participation constraint unreachable under the wage box")
        raise ConvergenceError(
            f"no KKT convergence after {cfg.max_outer_iters} outer iterations "
            f"(residual {resid:.3e}, participation slack {slack:.3e})",
            result=result,
        )

    contract = StateWise(w, a)
    return GeneralSolution(
        contract=contract,
        multipliers=mult,
        value=principal_value(p, contract),
        kkt=kkt_verify(p, contract, mult, cfg.kkt_tol),
        diagnostics={"outer_iters": outer, "inner_iters": inner_total, "residual": resid,
                     "pc_slack": slack, "penalty": c, "a_max": a_hi, "polished": polished},
    )
