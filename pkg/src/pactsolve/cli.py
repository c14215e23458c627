"""Command-line front end.

Exit codes: 0 success, 1 malformed input, 2 infeasible, 3 iteration cap
reached, 4 a check ran to completion and failed (KKT audit, figure target,
sweep monotonicity, perturbation path).
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .cara_solver import cara_ll_solve, perturbation_path, second_moment_bound
from .exceptions import (
    ConvergenceError,
    InfeasibleProblemError,
    PactSolveError,
    ProblemValidationError,
    UnsupportedProblemError,
)
from .figures import CURVE_POINTS, CURVE_HALF_WIDTH, run_all
from .general_solver import SolverConfig, general_ll_solve
from .model import Multipliers, ProblemSpec, agent_value, contract_from_dict, principal_value
from .utility import UtilitySpec
from .verification import brute_force_oracle, kkt_verify

log = logging.getLogger("pactsolve")

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_MAXITER, EXIT_CHECK = 0, 1, 2, 3, 4
DEFAULT_TOL = 1e-8
MAX_SWEEP_POINTS = 10_000
SWEEP_PARAMS = ("m", "M", "y", "gamma_P", "gamma_A", "K")
# expected direction of the principal's value as the parameter grows
SWEEP_MONOTONE = {"m": -1, "y": -1, "M": +1}


class InputError(Exception):
    """Bad command-line usage that is not tied to a problem field."""


def _pick_solver(p, choice):
    if choice == "auto":
        return "cara" if p.principal.is_cara and p.agent.is_cara else "general"
    return choice


def solve_problem(p, solver, tol):
    """Returns ``(record, contract, multipliers, status)`` for one instance.

    ``status`` is ``"converged"`` or ``"max_iterations"``.
    """
    kind = _pick_solver(p, solver)
    if kind == "cara":
        sol = cara_ll_solve(p)
        contract, mult = sol.contract, sol.multipliers(p)
        status = "converged" if sol.feasible else "max_iterations"
        diagnostics = sol.diagnostics
    else:
        try:
            sol = general_ll_solve(p, SolverConfig(kkt_tol=tol))
            status = "converged"
        except ConvergenceError as exc:
            if exc.result is None:
                raise
            sol, status = exc.result, "max_iterations"
        contract, mult = sol.contract, sol.multipliers
        diagnostics = sol.diagnostics
    record = {
        "problem": p.to_dict(),
        "solver": kind,
        "status": status,
        "tol": tol,
        "contract": contract.to_dict(),
        "multipliers": mult.to_dict(),
        "value": principal_value(p, contract),
        "agent_value": agent_value(p, contract),
        "diagnostics": diagnostics,
    }
    return record, contract, mult, status


def _curve_rows(p, record, contract):
    if record["solver"] == "cara":
        center = p.x0 + contract.a
        x = np.linspace(center - CURVE_HALF_WIDTH, center + CURVE_HALF_WIDTH, CURVE_POINTS)
        w = contract.wage_at(x, p.m, p.upper)
        return list(zip(x, w))
    return list(zip(p.outputs(contract.a), contract.wage_vector(p)))


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _need_input(args):
    if not args.input:
        raise InputError("--input is required for this command")
    return args.input


# --- commands -------------------------------------------------------------------

def cmd_solve(args):
    p = io.load_problem(_need_input(args))
    record, contract, mult, status = solve_problem(p, args.solver, args.tol)
    report = kkt_verify(p, contract, mult, args.tol)
    out = _outdir(args)
    io.write_json(out / "solution.json", record)
    io.write_csv(out / "wage_curve.csv", ["x", "wage"], _curve_rows(p, record, contract))
    io.write_json(out / "kkt_report.json", report.to_dict())
    _emit(args, {"status": status, "a": contract.a, "value": record["value"],
                 "max_residual": report.max_residual})
    return EXIT_OK if status == "converged" else EXIT_MAXITER


def verify_record(record, tol=None):
    p = ProblemSpec.from_dict(record["problem"])
    contract = contract_from_dict(record["contract"])
    mult = Multipliers.from_dict(record["multipliers"])
    tol = record.get("tol", DEFAULT_TOL) if tol is None else tol
    return kkt_verify(p, contract, mult, tol), tol


def cmd_verify(args):
    record = io.read_json(_need_input(args))
    if not isinstance(record, dict) or not {"problem", "contract", "multipliers"} <= set(record):
        raise ProblemValidationError("solution file needs 'problem', 'contract' and 'multipliers'",
                                     field="solution")
    report, tol = verify_record(record, args.tol_given)
    out = _outdir(args)
    io.write_json(out / "kkt_report.json", report.to_dict())
    _emit(args, {"passed": report.passed(tol), "max_residual": report.max_residual})
    return EXIT_OK if report.passed(tol) else EXIT_CHECK


def cmd_oracle(args):
    p = io.load_problem(_need_input(args))
    res = brute_force_oracle(p, args.wage_step, args.action_step, refine_rounds=args.refine)
    out = _outdir(args)
    io.write_json(out / "oracle.json", {"problem": p.to_dict(), **res.to_dict()})
    _emit(args, {"value": res.value, "a": res.contract.a, "points": res.points_evaluated})
    return EXIT_OK


def parse_grid(text):
    """``"v1,v2,..."`` or ``"start:stop:num"`` (inclusive linspace)."""
    text = (text or "").strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InputError("grid range must be start:stop:num")
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        if num < 0:
            raise InputError("grid size must be nonnegative")
        return np.linspace(start, stop, num).tolist()
    return [float(v) for v in text.split(",") if v.strip()]


def _with_param(p, name, value):
    if name in ("gamma_P", "gamma_A"):
        side = "principal" if name == "gamma_P" else "agent"
        if not getattr(p, side).is_cara:
            raise ProblemValidationError(f"{name} sweep needs a CARA {side}", field=name)
        return p.replace(**{side: UtilitySpec.cara(value)})
    return p.replace(**{name: value})


def _sweep_point(p, name, value, solver, tol):
    try:
        q = _with_param(p, name, value)
        record, contract, mult, status = solve_problem(q, solver, tol)
    except (PactSolveError, ValueError) as exc:
        return {"param": value, "status": type(exc).__name__, "error": str(exc)}
    w = contract.wage_vector(q)
    beta = contract.beta if record["solver"] == "cara" else float(q.shock.expect(w))
    return {
        "param": value,
        "a": contract.a,
        "beta_or_mean_wage": beta,
        "principal_value": record["value"],
        "agent_value": record["agent_value"],
        "e_z": float(q.shock.expect(mult.z)),
        "e_y": float(q.shock.expect(mult.y_mult)),
        "status": status,
    }


def sweep_checks(name, rows, tol=1e-10):
    """Monotonicity of the principal's value along the grid."""
    direction = SWEEP_MONOTONE.get(name)
    if direction is None:
        return []
    good = [r for r in rows if r.get("status") == "converged"]
    good.sort(key=lambda r: r["param"])
    failures = []
    for prev, cur in zip(good, good[1:]):
        step = direction * (cur["principal_value"] - prev["principal_value"])
        if step < -tol * max(1.0, abs(prev["principal_value"])):
            failures.append({"check": "principal_value " + ("nondecreasing" if direction > 0 else "nonincreasing"),
                             "between": [prev["param"], cur["param"]]})
    return failures


def workers(n):
    cap = os.environ.get("PACTSOLVE_THREADS")
    limit = os.cpu_count() or 1
    if cap:
        try:
            limit = max(1, int(cap))
        except ValueError:
            raise InputError("PACTSOLVE_THREADS must be a positive integer") from None
    return max(1, min(limit, n))


def cmd_sweep(args):
    p = io.load_problem(_need_input(args))
    if args.param not in SWEEP_PARAMS:
        raise InputError(f"--param must be one of {', '.join(SWEEP_PARAMS)}")
    grid = parse_grid(args.grid)
    if not grid:
        raise InputError("sweep grid is empty")
    if len(grid) > MAX_SWEEP_POINTS:
        raise InputError(f"sweep grid has {len(grid)} points (> {MAX_SWEEP_POINTS})")
    with ThreadPoolExecutor(max_workers=workers(len(grid))) as pool:
        # map keeps grid order whatever the completion order
        rows = list(pool.map(lambda v: _sweep_point(p, args.param, v, args.solver, args.tol), grid))
    failures = sweep_checks(args.param, rows)
    errors = [{"param": r["param"], "error": r["error"]} for r in rows if "error" in r]
    out = _outdir(args)
    header = ["param", "a", "beta_or_mean_wage", "principal_value", "agent_value", "e_z", "e_y", "status"]
    io.write_csv(out / "sweep.csv", header, [[r.get(h) for h in header] for r in rows])
    io.write_json(out / "sweep_summary.json", {
        "param": args.param, "points": len(rows), "check_failures": failures, "point_errors": errors,
    })
    _emit(args, {"points": len(rows), "check_failures": len(failures), "point_errors": len(errors)})
    return EXIT_CHECK if failures else EXIT_OK


def cmd_figures(args):
    results = run_all()
    out = _outdir(args)
    rows = []
    for res in results:
        x, rs_w, ll_w = res.curve()
        io.write_csv(out / f"{res.case.name}.csv", ["x", "rs_wage", "ll_wage"], zip(x, rs_w, ll_w))
        rows.extend(res.rows())
    header = ["figure", "quantity", "value", "expected", "tol", "pass", "informational"]
    io.write_csv(out / "figures_summary.csv", header, rows)
    failed = [r for r in rows if not r[5] and not r[6]]
    for r in rows:
        tag = "info" if r[6] else ("PASS" if r[5] else "FAIL")
        print(f"{r[0]:5s} {r[1]:8s} {r[2]: .6f} expected {r[3]: .4f} ± {r[4]:g}  {tag}")
    return EXIT_CHECK if failed else EXIT_OK


def cmd_perturb_path(args):
    p = io.load_problem(_need_input(args))
    path = perturbation_path(p, args.n_max)
    ref = cara_ll_solve(p)
    c_max = second_moment_bound(p)
    values = [s.value for s in path]
    monotone = all(b >= a - 1e-12 * max(1.0, abs(a)) for a, b in zip(values, values[1:]))
    gap = abs(values[-1] - ref.value)
    bounded = all(s.second_moment <= c_max for s in path)
    out = _outdir(args)
    header = ["n", "epsilon", "a", "lambda", "value", "objective", "second_moment", "pc_residual"]
    io.write_csv(out / "perturbation_path.csv", header,
                 [[k + 1, s.epsilon, s.a, s.lam, s.value, s.objective, s.second_moment, s.pc_residual]
                  for k, s in enumerate(path)])
    summary = {"c_max": c_max, "reference_value": ref.value, "final_gap": gap,
               "monotone": monotone, "below_bound": bounded, "within_1e-4": gap <= 1e-4}
    io.write_json(out / "perturbation_summary.json", summary)
    _emit(args, summary)
    return EXIT_OK if (monotone and bounded and gap <= 1e-4) else EXIT_CHECK


def _emit(args, summary):
    if args.format == "csv":
        keys = list(summary)
        print(",".join(keys))
        print(",".join(io.fmt(summary[k]) for k in keys))
    else:
        sys.stdout.write(io.dumps(summary))


# --- argument parsing -------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="problem JSON (solution JSON for verify)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--solver", choices=("cara", "general", "auto"), default="auto")
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="format of the summary printed to stdout")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for randomised suites (solvers are deterministic)")
    common.add_argument("--tol", type=float, default=None, help=f"KKT tolerance (default {DEFAULT_TOL:g})")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="pactsolve",
                                     description="Limited-liability risk-sharing contract solver.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve one instance")
    sub.add_parser("verify", parents=[common], help="audit a solution.json")
    o = sub.add_parser("oracle", parents=[common], help="brute-force grid search (<= 5 atoms)")
    o.add_argument("--wage-step", type=float, default=0.05)
    o.add_argument("--action-step", type=float, default=0.05)
    o.add_argument("--refine", type=int, default=2)
    s = sub.add_parser("sweep", parents=[common], help="one-parameter sweep")
    s.add_argument("--param", required=True)
    s.add_argument("--grid", default="", help="'v1,v2,...' or 'start:stop:num'")
    sub.add_parser("figures", parents=[common], help="reproduce the built-in figure instances")
    pp = sub.add_parser("perturb-path", parents=[common], help="epsilon-perturbation path (CARA)")
    pp.add_argument("--n-max", type=int, default=20)
    return parser


COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "oracle": cmd_oracle,
    "sweep": cmd_sweep,
    "figures": cmd_figures,
    "perturb-path": cmd_perturb_path,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.tol_given = args.tol
    if args.tol is None:
        args.tol = DEFAULT_TOL
    if not (math.isfinite(args.tol) and args.tol > 0):
        print("error: --tol must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except ProblemValidationError as exc:
        where = f" (field {exc.field!r})" if exc.field else ""
        print(f"error{where}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, UnsupportedProblemError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleProblemError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConvergenceError as exc:
        print(f"iteration cap: {exc}", file=sys.stderr)
        return EXIT_MAXITER
    except PactSolveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
