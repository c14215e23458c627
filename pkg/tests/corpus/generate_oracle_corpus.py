"""Regenerate the brute-force oracle certificates in ``v1/``.

Run from the repository root:  python3 tests/corpus/generate_oracle_corpus.py
Each file holds the instance, the grid steps and the oracle's argmax/value.
The solvers are not consulted.
"""

import json
import sys
import time
from pathlib import Path

from pactsolve.io import dumps
from pactsolve.verification import brute_force_oracle

HERE = Path(__file__).resolve().parent / "v1"


def cara(g):
    return {"kind": "cara", "gamma": g}


ELOG = {"kind": "extended_log"}


def inst(name, x0, K, y, m, M, up, ua, atoms, probs, wstep, astep):
    prob = {"x0": x0, "K": K, "y": y, "m": m, "principal": up, "agent": ua,
            "shock": {"kind": "custom", "atoms": atoms, "probs": probs}}
    if M is not None:
        prob["M"] = M
    return name, prob, wstep, astep


INSTANCES = [
    inst("cara_1atom_two_sided", 1, 2, 1, 0, 10, cara(0.5), cara(0.5), [0], [1], 0.05, 0.05),
    inst("cara_1atom_one_sided", 0, 1, 0.5, 0, None, cara(1), cara(2), [0], [1], 0.05, 0.05),
    inst("cara_2atom_one_sided", 1, 2, 1, 0, None, cara(0.2), cara(0.2), [-1, 1], [0.5, 0.5], 0.05, 0.05),
    inst("cara_2atom_tight_floor", 0, 2, 0.5, 0.3, None, cara(2), cara(0.5), [-1.5, 1.5], [0.5, 0.5], 0.05, 0.05),
    inst("cara_2atom_two_sided", 1, 2, 1, 0, 1.6, cara(0.5), cara(1), [-2, 2], [0.5, 0.5], 0.01, 0.01),
    inst("cara_2atom_skewed", 0.5, 1.5, 1, 0.5, 3, cara(1), cara(0.3), [-1, 2], [0.7, 0.3], 0.05, 0.05),
    inst("cara_3atom_symmetric", 1, 2, 1, 0, 3, cara(0.5), cara(0.5), [-1.5, 0, 1.5], [0.25, 0.5, 0.25], 0.05, 0.05),
    inst("cara_3atom_one_sided", 1, 2, 0.5, 0, None, cara(5), cara(0.1), [-1.5, 0, 1.5], [0.25, 0.5, 0.25], 0.1, 0.05),
    inst("cara_3atom_cap_binds", 2, 2, 1, 0.5, 1.5, cara(0.3), cara(0.3), [-2, 0, 2], [0.3, 0.4, 0.3], 0.01, 0.01),
    inst("cara_4atom_two_sided", 1, 2, 1, 0, 2, cara(1), cara(1), [-2, -0.5, 0.5, 2], [0.1, 0.4, 0.4, 0.1], 0.1, 0.05),
    inst("cara_5atom_two_sided", 1, 2, 1, 0, 2, cara(0.5), cara(0.5), [-2, -1, 0, 1, 2], [0.1, 0.2, 0.4, 0.2, 0.1], 0.25, 0.1),
    inst("elog_1atom", 1, 2, 1, 0, 2, ELOG, ELOG, [0], [1], 0.02, 0.02),
    inst("elog_2atom_two_sided", 1, 2, 1, 0, 2, ELOG, ELOG, [-1, 1], [0.5, 0.5], 0.02, 0.02),
    inst("elog_2atom_wide", 1, 2, 1, 0, 2, ELOG, ELOG, [-3, 3], [0.5, 0.5], 0.005, 0.005),
    inst("elog_2atom_one_sided", 2, 1, 1, 0, None, ELOG, ELOG, [-1, 1], [0.5, 0.5], 0.05, 0.05),
    inst("elog_3atom_two_sided", 1, 2, 1, 0, 2, ELOG, ELOG, [-2, 0, 2], [0.3, 0.4, 0.3], 0.01, 0.01),
    inst("elog_uniform5_downsampled", 1, 2, 1, 0, 2, ELOG, ELOG, [-4, -2, 0, 2, 4], [0.2] * 5, 0.25, 0.1),
    inst("elog_cara_2atom", 2, 2, 1, 0, 3, ELOG, cara(1), [-1, 1], [0.5, 0.5], 0.05, 0.05),
    inst("cara_elog_2atom_one_sided", 1, 2, 1, 0, None, cara(0.5), ELOG, [-1, 1], [0.5, 0.5], 0.05, 0.05),
    inst("cara_elog_3atom_two_sided", 1, 2, 1, 0, 2.5, cara(1), ELOG, [-1, 0, 1], [0.25, 0.5, 0.25], 0.05, 0.02),
]


def main(names=None):
    from pactsolve.model import ProblemSpec

    HERE.mkdir(parents=True, exist_ok=True)
    for name, prob, wstep, astep in INSTANCES:
        if names and name not in names:
            continue
        p = ProblemSpec.from_dict(prob)
        t0 = time.perf_counter()
        res = brute_force_oracle(p, wstep, astep)
        cert = {"name": name, "problem": prob, "wage_grid_step": wstep,
                "action_grid_step": astep, "oracle": res.to_dict()}
        (HERE / f"{name}.json").write_text(dumps(cert), encoding="utf-8")
        print(f"{name}: value={res.value:.10f} a={res.contract.a:.5f} "
              f"points={res.points_evaluated} {time.perf_counter() - t0:.1f}s", flush=True)


if __name__ == "__main__":
    main(sys.argv[1:])
