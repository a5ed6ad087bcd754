import pytest

from sphquad_kit.tools.construct import solve
from sphquad_kit.tools.icosahedral import get_group
from sphquad_kit.tools.rules import product_gauss_legendre, product_trapezoid


@pytest.fixture(scope="session")
def group():
    return get_group()


@pytest.fixture(scope="session")
def rule_n11():
    return solve(11, ["vertex", "generic", "generic"], seed=0)


@pytest.fixture(scope="session")
def rule_n17():
    return solve(17, ["vertex", "generic", "generic", "generic"], seed=0)


@pytest.fixture(scope="session")
def tt_30_60():
    return product_trapezoid(30, 60)


@pytest.fixture(scope="session")
def glt_30_60():
    return product_gauss_legendre(30, 60)
