import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from pactsolve.exceptions import ProblemValidationError
from pactsolve.utility import EXP_CLAMP, UtilityKind, UtilitySpec

from conftest import ALL_KINDS

SQ3 = math.sqrt(3.0)


def test_cara_value_at_zero():
    assert UtilitySpec.cara(1.0).value(0.0) == -1.0


def test_extended_log_points():
    u = UtilitySpec.extended_log()
    assert u.value(1.0) == 0.0
    assert u.value(0.0) == -1.5
    assert u.deriv(2.0) == 0.5
    assert u.deriv(0.0) == 2.0


def test_extended_arctan_knot_value():
    u = UtilitySpec.extended_arctan()
    assert_allclose(u.value(1.0 / SQ3), math.pi / 6.0, rtol=0, atol=1e-15)
    # left branch evaluated just below the knot agrees too
    assert_allclose(u.value(np.nextafter(1.0 / SQ3, 0.0)), math.pi / 6.0, atol=1e-14)


def test_cara_derivatives():
    u = UtilitySpec.cara(2.0)
    assert u.deriv(0.0) == 2.0
    assert u.deriv2(0.0) == -4.0


@pytest.mark.parametrize("x", [-3.0, 0.0, 0.7, 5.0])
def test_absolute_risk_aversion(x):
    assert_allclose(UtilitySpec.cara(0.2).absolute_risk_aversion(x), 0.2, rtol=1e-14)
    assert UtilitySpec.risk_neutral().absolute_risk_aversion(x) == 0.0
    if x >= 0:
        assert_allclose(UtilitySpec.partial_iara().absolute_risk_aversion(x), 1.0, rtol=1e-14)


def test_partial_iara_risk_aversion_rises_below_zero():
    u = UtilitySpec.partial_iara()
    xs = np.linspace(-5, -0.01, 50)
    assert np.all(np.diff(u.absolute_risk_aversion(xs)) > 0)


def test_piecewise_branches_printed_formula():
    x = np.array([-2.0, 0.3])
    assert_allclose(UtilitySpec.extended_log().value(x), -0.5 * (x ** 2 - 4 * x + 3))
    assert_allclose(UtilitySpec.partial_iara().value(-1.0), -(0.5 + 1 + 1))
    assert_allclose(UtilitySpec.partial_iara().value(2.0), -math.exp(-2.0))
    xa = 0.1
    expected = (-3 * SQ3 * xa ** 2 + 18 * xa + 16 * math.pi / 6 + SQ3 - 18 / SQ3) / 16
    assert_allclose(UtilitySpec.extended_arctan().value(xa), expected, rtol=1e-15)


@pytest.mark.parametrize("u", ALL_KINDS, ids=str)
def test_monotone_and_concave_on_random_points(u, rng):
    x = rng.uniform(-50, 50, 10_000)
    assert np.all(u.deriv(x) > 0)
    assert np.all(u.deriv2(x) <= 0)


def _away_from_knot(u, x):
    return x if u.knot is None else x[np.abs(x - u.knot) >= 1e-3]


@pytest.mark.parametrize("u", ALL_KINDS, ids=str)
def test_finite_differences(u, rng):
    x = _away_from_knot(u, rng.uniform(-4, 4, 500))
    h = 1e-5
    fd1 = (u.value(x + h) - u.value(x - h)) / (2 * h)
    fd2 = (u.deriv(x + h) - u.deriv(x - h)) / (2 * h)
    d1, d2 = u.deriv(x), u.deriv2(x)
    assert np.max(np.abs(fd1 - d1) / np.abs(d1)) <= 1e-6
    scale = np.maximum(np.abs(d2), 1e-12)
    ok = np.abs(d2) > 0
    if np.any(ok):
        assert np.max(np.abs(fd2 - d2)[ok] / scale[ok]) <= 1e-6
    else:
        assert np.max(np.abs(fd2)) <= 1e-9


@pytest.mark.parametrize("u", [k for k in ALL_KINDS if k.knot is not None], ids=str)
def test_knot_continuity(u):
    eps = 1e-9
    k = u.knot
    assert abs(u.value(k - eps) - u.value(k + eps)) <= 1e-8
    assert abs(u.deriv(k - eps) - u.deriv(k + eps)) <= 1e-8


def test_closed_branch_on_the_knot():
    # x >= knot takes the right-hand formula exactly
    assert UtilitySpec.extended_log().deriv2(1.0) == -1.0
    assert UtilitySpec.partial_iara().value(0.0) == -1.0
    assert UtilitySpec.extended_arctan().deriv(1.0 / SQ3) == 1.0 / (1.0 + (1.0 / SQ3) ** 2)


def test_extended_arctan_bounded(rng):
    x = rng.uniform(-1e3, 1e6, 10_000)
    assert np.all(UtilitySpec.extended_arctan().value(x) < math.pi / 2)


def test_cara_saturation_is_flagged_not_nan():
    u = UtilitySpec.cara(1.0)
    x = np.array([-1e6, 0.0, 1e6])
    v = u.value(x)
    assert np.all(np.isfinite(v))
    assert_allclose(v[0], -math.exp(EXP_CLAMP))
    np.testing.assert_array_equal(u.saturated(x), [True, False, True])


@pytest.mark.parametrize("u", ALL_KINDS, ids=str)
def test_inverse_roundtrip(u, rng):
    x = rng.uniform(-6, 6, 200)
    assert_allclose(u.inverse(u.value(x)), x, rtol=1e-9, atol=1e-9)


def test_inverse_above_supremum_is_infinite():
    assert UtilitySpec.cara(1.0).inverse(0.0) == math.inf
    assert UtilitySpec.extended_arctan().inverse(2.0) == math.inf


def test_scalar_in_scalar_out():
    assert isinstance(UtilitySpec.extended_log().value(3.0), float)


def test_validation():
    with pytest.raises(ProblemValidationError):
        UtilitySpec.cara(0.0)
    with pytest.raises(ProblemValidationError):
        UtilitySpec(UtilityKind.EXTENDED_LOG, 0.5)
    with pytest.raises(ProblemValidationError):
        UtilitySpec.from_dict({"kind": "crra"})


@pytest.mark.parametrize("u", ALL_KINDS, ids=str)
def test_dict_roundtrip(u):
    assert UtilitySpec.from_dict(u.to_dict()) == u
