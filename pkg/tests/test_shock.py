import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from pactsolve.exceptions import ProblemValidationError
from pactsolve.shock import ShockGrid, custom, gauss_hermite, uniform


def _normal_moment(k):
    # E[B^k] for B ~ N(0,1): 0 for odd k, (k-1)!! otherwise
    if k % 2:
        return 0.0
    return float(math.prod(range(k - 1, 0, -2))) if k else 1.0


def test_single_node():
    g = gauss_hermite(1)
    np.testing.assert_array_equal(g.atoms, [0.0])
    np.testing.assert_array_equal(g.probs, [1.0])


def test_gh64_low_moments():
    g = gauss_hermite(64)
    assert abs(g.mean()) <= 1e-10
    assert abs(g.moment(2) - 1.0) <= 1e-10
    assert abs(g.probs.sum() - 1.0) <= 1e-12


def test_gh64_lognormal_moment():
    g = gauss_hermite(64)
    assert abs(g.expect(np.exp(-0.1 * g.atoms)) - math.exp(0.005)) <= 1e-8


@pytest.mark.parametrize("n", [2, 5, 12])
def test_gh_exact_on_polynomials(n):
    g = gauss_hermite(n)
    for k in range(2 * n):
        expected = _normal_moment(k)
        # odd moments cancel: rounding scales with E|B|^k, not with the result
        scale = max(1.0, g.expect(np.abs(g.atoms) ** k))
        assert abs(g.moment(k) - expected) <= 1e-9 * scale


@pytest.mark.parametrize("n", [0, 257])
def test_gh_order_range(n):
    with pytest.raises(ProblemValidationError):
        gauss_hermite(n)


def test_uniform_two_cells():
    g = uniform(-5, 5, 2)
    np.testing.assert_array_equal(g.atoms, [-2.5, 2.5])
    np.testing.assert_array_equal(g.probs, [0.5, 0.5])


def test_uniform_moments():
    g = uniform(-5, 5, 200)
    assert abs(g.mean()) <= 1e-12
    assert abs(g.moment(2) - 100.0 / 12.0) <= 1e-2


@pytest.mark.parametrize("args", [(0, 1, 1), (1, 1, 4), (2, 1, 4)])
def test_uniform_errors(args):
    with pytest.raises(ProblemValidationError):
        uniform(*args)


def test_custom_sort_and_merge():
    np.testing.assert_array_equal(custom([0], [1]).atoms, [0.0])
    g = custom([1, -1], [0.5, 0.5])
    np.testing.assert_array_equal(g.atoms, [-1.0, 1.0])
    g = custom([0, 0], [0.5, 0.5])
    np.testing.assert_array_equal(g.atoms, [0.0])
    np.testing.assert_array_equal(g.probs, [1.0])


def test_custom_permutes_probs_with_atoms():
    g = custom([3, 1, 2], [0.5, 0.2, 0.3])
    np.testing.assert_array_equal(g.atoms, [1, 2, 3])
    assert_allclose(g.probs, [0.2, 0.3, 0.5])


@pytest.mark.parametrize("atoms,probs", [([], []), ([0, 1], [0.5, -0.5]), ([0, 1], [0.5, 0.4]),
                                         ([0, 1], [1.0, 0.0])])
def test_custom_errors(atoms, probs):
    with pytest.raises(ProblemValidationError):
        custom(atoms, probs)


def test_grid_is_read_only():
    g = gauss_hermite(4)
    with pytest.raises(ValueError):
        g.atoms[0] = 1.0


def test_direct_construction_validates():
    with pytest.raises(ProblemValidationError):
        ShockGrid([1.0, 0.0], [0.5, 0.5])


@pytest.mark.parametrize("grid", [gauss_hermite(16), uniform(-5, 5, 7), custom([-1, 2], [0.3, 0.7])])
def test_dict_roundtrip(grid):
    back = ShockGrid.from_dict(grid.to_dict())
    np.testing.assert_array_equal(back.atoms, grid.atoms)
    np.testing.assert_array_equal(back.probs, grid.probs)


def test_from_dict_errors():
    with pytest.raises(ProblemValidationError):
        ShockGrid.from_dict({"kind": "cauchy"})
    with pytest.raises(ProblemValidationError):
        ShockGrid.from_dict({"kind": "uniform", "lo": 0})
