import numpy as np
import pytest
from hypothesis import settings

from pactsolve.figures import FIGURE_BY_NAME
from pactsolve.model import ProblemSpec
from pactsolve.shock import gauss_hermite
from pactsolve.utility import UtilitySpec

settings.register_profile("default", deadline=None, derandomize=True, print_blob=True)
settings.load_profile("default")

ALL_KINDS = [
    UtilitySpec.cara(0.2),
    UtilitySpec.cara(2.0),
    UtilitySpec.extended_log(),
    UtilitySpec.partial_iara(),
    UtilitySpec.extended_arctan(),
    UtilitySpec.risk_neutral(),
]


@pytest.fixture
def fig1():
    return FIGURE_BY_NAME["fig1"].problem()


@pytest.fixture
def fig4():
    return FIGURE_BY_NAME["fig4"].problem()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def cara_problem(gp=0.2, ga=0.2, x0=1.0, K=2.0, y=1.0, m=0.0, M=None, n=64, shock=None):
    return ProblemSpec(x0=x0, K=K, y=y, m=m, M=M, principal=UtilitySpec.cara(gp),
                       agent=UtilitySpec.cara(ga), shock=shock or gauss_hermite(n))
