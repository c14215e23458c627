"""Independent audits of candidate contracts.

Nothing here calls into the solvers: the KKT residuals are recomputed from
the utilities directly, and the brute-force oracle enumerates grids.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import GridTooLargeError, NoInteriorStatesError, PactSolveError
from .model import StateWise

MAX_ORACLE_ATOMS = 5
MAX_GRID_POINTS = 10 ** 8
_CHUNK = 1 << 18


@dataclass(frozen=True)
class KKTReport:
    r_stationarity_a: float
    r_stationarity_w: float
    r_pc_slack: float
    r_bound_slack: float
    lam: float
    borch_spread: float
    action_bound_ok: bool
    pc_binding: bool
    feasible: bool
    interior_mass: float
    pc_slack: float
    expected_z_minus_y: float
    kappa_prime_minus_one: float

    @property
    def max_residual(self):
        return max(self.r_stationarity_a, self.r_stationarity_w,
                   self.r_pc_slack, self.r_bound_slack)

    def passed(self, tol):
        return self.feasible and self.max_residual <= tol

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


def _interior(p, w, tol):
    return np.minimum(w - p.m, p.upper - w) > 10.0 * tol


def kkt_verify(p, contract, multipliers, tol=1e-8):
    """Residuals of the four necessary optimality conditions.

    1. ``|E[u_P'] - lam kappa'(a) E[u_A']|``
    2. ``sup_i |u_P'_i - lam u_A'_i - Z_i + Y_i|``
    3. ``|lam (E[u_A(W - kappa)] - u_A(y))|``
    4. ``|E[Z (W - m)]| + |E[Y (M - W)]|``
    """
    w = np.asarray(contract.wage_vector(p), dtype=float)
    a = float(contract.a)
    probs = p.shock.probs
    lam = float(multipliers.lam)
    z = np.asarray(multipliers.z, dtype=float)
    y = np.asarray(multipliers.y_mult, dtype=float)
    kap = 0.5 * p.K * a * a
    dkap = p.K * a

    mp = p.principal.deriv(p.x0 + a + p.shock.atoms - w)
    ma = p.agent.deriv(w - kap)
    e_mp = float(probs @ mp)
    e_ma = float(probs @ ma)

    r1 = abs(e_mp - lam * dkap * e_ma)
    r2 = float(np.max(np.abs(mp - lam * ma - z + y)))
    slack = float(probs @ p.agent.value(w - kap)) - float(p.agent.value(p.y))
    r3 = abs(lam * slack)
    r4 = abs(float(probs @ (z * (w - p.m))))
    if p.M is not None:
        r4 += abs(float(probs @ (y * (p.M - w))))

    interior = _interior(p, w, tol)
    if np.any(interior) and lam > 0:
        ratio = mp[interior] / ma[interior]
        spread = float(np.max(np.abs(ratio - lam))) / lam
    else:
        spread = math.inf
    mass = float(probs @ interior)

    ezy = float(probs @ (z - y))
    gap = dkap - 1.0
    if p.M is None:
        action_ok = gap >= -tol
    else:
        # sign(kappa'(a) - 1) must match sign(E[Z - Y]) unless one is noise
        noise = max(tol, r1 + r2)
        action_ok = (abs(ezy) <= 10.0 * noise or abs(gap) <= 10.0 * noise
                     or (gap > 0) == (ezy > 0))

    lower_ok = float(np.min(w - p.m)) >= -tol
    upper_ok = p.M is None or float(np.max(w - p.M)) <= tol
    return KKTReport(
        r_stationarity_a=r1,
        r_stationarity_w=r2,
        r_pc_slack=r3,
        r_bound_slack=r4,
        lam=lam,
        borch_spread=spread,
        action_bound_ok=bool(action_ok),
        pc_binding=abs(slack) <= tol,
        feasible=bool(lower_ok and upper_ok and slack >= -tol),
        interior_mass=mass,
        pc_slack=slack,
        expected_z_minus_y=ezy,
        kappa_prime_minus_one=gap,
    )


def borch_check(p, contract, lam, tol=1e-8):
    """Relative spread of the marginal-utility ratio around ``lam`` on
    states where no wage bound binds, and the probability of those states.
    """
    w = np.asarray(contract.wage_vector(p), dtype=float)
    a = float(contract.a)
    interior = _interior(p, w, tol)
    if not np.any(interior):
        raise NoInteriorStatesError("every wage is pinned to a bound")
    mp = p.principal.deriv(p.x0 + a + p.shock.atoms[interior] - w[interior])
    ma = p.agent.deriv(w[interior] - 0.5 * p.K * a * a)
    spread = float(np.max(np.abs(mp / ma - lam))) / abs(lam)
    return spread, float(p.shock.probs @ interior)


# --- brute-force oracle -------------------------------------------------------

@dataclass
class OracleResult:
    contract: StateWise
    value: float
    points_evaluated: int
    wage_box: tuple
    action_box: tuple
    final_steps: tuple

    def to_dict(self):
        return {
            "contract": self.contract.to_dict(),
            "value": self.value,
            "points_evaluated": self.points_evaluated,
            "wage_box": list(self.wage_box),
            "action_box": list(self.action_box),
            "final_steps": list(self.final_steps),
        }


def _axis(lo, hi, step):
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    pts = lo + step * np.arange(n)
    if hi - pts[-1] > 1e-12 * max(1.0, abs(hi)):
        pts = np.append(pts, hi)
    return pts


class _Enumerator:
    """Evaluates grid points; the last wage is set to the cheapest feasible one."""

    def __init__(self, p, w_lo, w_hi):
        self.p = p
        self.w_lo, self.w_hi = w_lo, w_hi
        self.target = float(p.agent.value(p.y))
        self.probs = p.shock.probs
        self.count = 0

    def evaluate(self, free_w, a):
        """``free_w``: (k, n-1) wages, ``a``: (k,) actions -> values, last wage."""
        p, probs = self.p, self.probs
        kap = 0.5 * p.K * a * a
        got = (p.agent.value(free_w - kap[:, None]) @ probs[:-1]) if free_w.shape[1] else 0.0
        need = (self.target - got) / probs[-1]
        last = np.asarray(p.agent.inverse(need), dtype=float) + kap
        last = np.maximum(last, self.w_lo)
        ok = last <= self.w_hi
        last = np.where(ok, last, self.w_hi)
        wages = np.concatenate([free_w, last[:, None]], axis=1)
        x = p.x0 + a[:, None] + p.shock.atoms[None, :]
        vals = p.principal.value(x - wages) @ probs
        vals = np.where(ok, vals, -np.inf)
        self.count += a.size
        return vals, last

    def search(self, axes):
        sizes = [ax.size for ax in axes]
        total = int(np.prod(sizes, dtype=np.int64))
        best_val, best_idx, best_last = -np.inf, None, None
        for start in range(0, total, _CHUNK):
            flat = np.arange(start, min(start + _CHUNK, total))
            idx = np.unravel_index(flat, sizes)
            cols = [ax[i] for ax, i in zip(axes, idx)]
            free_w = np.stack(cols[:-1], axis=1) if len(cols) > 1 else np.empty((flat.size, 0))
            vals, last = self.evaluate(free_w, cols[-1])
            k = int(np.argmax(vals))
            if vals[k] > best_val:
                best_val = float(vals[k])
                best_idx = tuple(int(i[k]) for i in idx)
                best_last = float(last[k])
        if best_idx is None:
            raise PactSolveError("no feasible grid point; refine the grid")
        point = np.array([ax[i] for ax, i in zip(axes, best_idx)])
        return best_val, point, best_last


def brute_force_oracle(p, wage_grid_step, action_grid_step, *, refine_rounds=2):
    """Exhaustive grid search over wages and action for tiny instances.

    The wage of the last atom is not gridded: because the objective falls
    with every wage, its best value is the smallest one meeting
    participation, obtained through the agent's inverse utility.  The coarse
    argmax is then refined ``refine_rounds`` times on a 10x finer local grid.
    """
    n = p.shock.n
    if n > MAX_ORACLE_ATOMS:
        raise PactSolveError(f"oracle supports at most {MAX_ORACLE_ATOMS} atoms, got {n}")
    if not (wage_grid_step > 0 and action_grid_step > 0):
        raise ValueError("grid steps must be positive")
    w_lo = p.m
    capped = p.M is None
    w_hi = p.m + 20.0 * (p.y - p.m + 1.0) if capped else p.M
    if w_hi < p.y:
        raise PactSolveError("participation unreachable inside the wage box")
    a_hi = math.sqrt(2.0 * (w_hi - p.y) / p.K)

    axes = [_axis(w_lo, w_hi, wage_grid_step) for _ in range(n - 1)]
    axes.append(_axis(0.0, a_hi, action_grid_step))
    total = int(np.prod([ax.size for ax in axes], dtype=np.int64))
    if total > MAX_GRID_POINTS:
        raise GridTooLargeError(f"oracle grid has {total} points (> {MAX_GRID_POINTS})")

    enum = _Enumerator(p, w_lo, w_hi)
    value, point, last = enum.search(axes)
    steps = [wage_grid_step] * (n - 1) + [action_grid_step]
    for _ in range(refine_rounds):
        new_axes = []
        for c, h, (lo, hi) in zip(point, steps, [(w_lo, w_hi)] * (n - 1) + [(0.0, a_hi)]):
            fine = h / 10.0
            ax = c + fine * np.arange(-10, 11)
            new_axes.append(np.unique(np.clip(ax, lo, hi)))
        steps = [h / 10.0 for h in steps]
        value, point, last = enum.search(new_axes)

    wages = np.append(point[:-1], last)
    # the eliminated last wage is off-grid, so judge closeness by the coarse step
    if capped and np.max(wages) >= w_hi - wage_grid_step:
        raise PactSolveError("artificial wage cap binds at the oracle optimum; widen it")
    return OracleResult(
        contract=StateWise(wages, float(point[-1])),
        value=value,
        points_evaluated=enum.count,
        wage_box=(w_lo, w_hi),
        action_box=(0.0, a_hi),
        final_steps=tuple(steps),
    )
