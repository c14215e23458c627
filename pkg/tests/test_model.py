import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from pactsolve.exceptions import InfeasibleProblemError, ProblemValidationError, UnsupportedProblemError
from pactsolve.model import (
    Multipliers,
    Parametric,
    ProblemSpec,
    StateWise,
    agent_value,
    check_reachable,
    contract_from_dict,
    is_feasible,
    pc_residual,
    principal_value,
    rs_solve,
    state_multipliers,
)
from pactsolve.shock import custom, gauss_hermite
from pactsolve.utility import UtilitySpec

from conftest import cara_problem


def _gaussian_rs_beta(p):
    # closed form from the normal mgf: E[e^{-g(rho B)}] = e^{g^2 rho^2 / 2}
    gp, ga = p.principal.gamma, p.agent.gamma
    rho = gp / (gp + ga)
    a = 1.0 / p.K
    return p.y + p.kappa(a) - rho * (p.x0 + a) + ga * rho ** 2 / 2


@pytest.mark.parametrize("field,kwargs,msg", [
    ("K", {"K": 0.0}, "K > 0 required"),
    ("y", {"y": -1.0, "m": -2.0}, "y ≥ 0 required"),
    ("m", {"m": 2.0}, "m ≤ y required"),
    ("M", {"m": 0.0, "M": 0.0, "y": 0.0}, "m < M required"),
])
def test_validation_messages(field, kwargs, msg):
    base = dict(x0=1.0, K=2.0, y=1.0, m=0.0, M=None)
    base.update(kwargs)
    with pytest.raises(ProblemValidationError, match=msg) as err:
        ProblemSpec(principal=UtilitySpec.cara(1), agent=UtilitySpec.cara(1),
                    shock=gauss_hermite(4), **base)
    assert err.value.field == field


def test_non_numeric_field():
    with pytest.raises(ProblemValidationError) as err:
        cara_problem(x0="abc")
    assert err.value.field == "x0"


def test_y_above_cap_is_reported_by_solvers():
    p = cara_problem(M=0.5)
    with pytest.raises(InfeasibleProblemError):
        check_reachable(p)


def test_dict_roundtrip_and_extra_fields(fig1):
    d = fig1.to_dict()
    back = ProblemSpec.from_dict(d)
    assert back.to_dict() == d
    with pytest.raises(ProblemValidationError):
        ProblemSpec.from_dict({**d, "gamma": 1})
    missing = dict(d)
    del missing["K"]
    with pytest.raises(ProblemValidationError) as err:
        ProblemSpec.from_dict(missing)
    assert err.value.field == "K"


def test_functionals_by_hand():
    p = ProblemSpec(0.0, 2.0, 0.5, 0.0, None, UtilitySpec.risk_neutral(), UtilitySpec.risk_neutral(),
                    custom([-1, 1], [0.25, 0.75]))
    c = StateWise([1.0, 2.0], 1.0)
    # X = 1 + b = [0, 2]; E[X - W] = 0.25*(-1) + 0.75*0 ; E[W - 1] = 0.25*0 + 0.75*1
    assert principal_value(p, c) == -0.25
    assert agent_value(p, c) == 0.75
    assert pc_residual(p, c) == 0.25


def test_parametric_clamps():
    c = Parametric(0.5, -1.0, 0.5)
    assert_allclose(c.wage_at([0.0, 4.0, 10.0], 0.0, 3.0), [0.0, 1.0, 3.0])
    free = Parametric(0.5, -1.0, 0.5, clamped=False)
    assert_allclose(free.wage_at([0.0]), [-1.0])
    with pytest.raises(ProblemValidationError):
        Parametric(1.5, 0.0, 0.0)
    with pytest.raises(ProblemValidationError):
        StateWise([0.0], -0.1)


def test_contract_dict_roundtrip():
    for c in (Parametric(0.3, 0.1, 0.7), StateWise([0.1, 0.2], 0.4)):
        back = contract_from_dict(c.to_dict())
        assert back.to_dict() == c.to_dict()
    with pytest.raises(ProblemValidationError):
        contract_from_dict({"type": "table"})


def test_statewise_length_checked(fig1):
    with pytest.raises(ProblemValidationError):
        StateWise([1.0, 2.0], 0.5).wage_vector(fig1)


def test_multipliers_nonnegative():
    with pytest.raises(ProblemValidationError):
        Multipliers(-1.0, [0.0], [0.0])
    m = Multipliers.from_dict(Multipliers(1.0, [0.5], [0.0]).to_dict())
    assert m.lam == 1.0


def test_is_feasible_reports_worst_state():
    p = cara_problem(M=3.0, shock=custom([-1, 0, 1], [0.2, 0.6, 0.2]))
    rep = is_feasible(p, StateWise([1.5, 1.5, 3.5], 0.0))
    assert not rep
    assert not rep.bounds_ok and rep.worst_state == 2
    assert_allclose(rep.bound_violation, 0.5)
    rep = is_feasible(p, StateWise([1.0, 1.0, 1.0], 0.0))
    assert rep and rep.pc_ok and rep.worst_state is None
    rep = is_feasible(p, StateWise([0.5, 0.5, 0.5], 0.0))
    assert not rep.pc_ok and rep.bounds_ok


def test_anchor_contract_is_feasible(fig1):
    assert is_feasible(fig1, StateWise(np.full(64, fig1.y), 0.0))


def test_rs_risk_neutral_principal():
    p = ProblemSpec(1.0, 2.0, 1.0, 0.0, None, UtilitySpec.risk_neutral(), UtilitySpec.cara(0.5),
                    gauss_hermite(32))
    c = rs_solve(p)
    assert c.a == 0.5 and c.rho == 0.0
    assert_allclose(c.beta, 1.0 + 0.25)


@pytest.mark.parametrize("gp,ga,x0,y", [(0.2, 0.2, 1, 1), (0.2, 1.0, 1, 1), (5, 0.1, 1, 0.5),
                                         (5, 0.1, 5, 0.5)])
def test_rs_gaussian_closed_form(gp, ga, x0, y):
    p = cara_problem(gp, ga, x0=x0, y=y)
    c = rs_solve(p)
    assert c.a == 0.5
    assert_allclose(c.rho, gp / (gp + ga), rtol=1e-15)
    assert abs(c.beta - _gaussian_rs_beta(p)) <= 1e-8


def test_rs_unsupported_pair():
    p = ProblemSpec(1.0, 2.0, 1.0, 0.0, None, UtilitySpec.extended_log(), UtilitySpec.cara(1),
                    gauss_hermite(8))
    with pytest.raises(UnsupportedProblemError):
        rs_solve(p)


def test_state_multipliers_split(fig4):
    c = Parametric(0.98, 0.0772422, 1.358)
    w = c.wage_vector(fig4)
    mult = state_multipliers(fig4, w, c.a, 60.0)
    assert np.all(mult.z >= 0) and np.all(mult.y_mult == 0)
    r = fig4.principal.deriv(fig4.outputs(c.a) - w) - 60.0 * fig4.agent.deriv(w - fig4.kappa(c.a))
    assert_allclose(mult.z - mult.y_mult, np.maximum(r, 0.0))
