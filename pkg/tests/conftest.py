import numpy as np
import pytest

from scarscan import build_pxp, diagonalize, enumerate_basis

Z2 = "0101010101"
Z2P = "1010101010"


@pytest.fixture(scope="session")
def basis10():
    return enumerate_basis(10)


@pytest.fixture(scope="session")
def eig10(basis10):
    return diagonalize(build_pxp(basis10))


@pytest.fixture(scope="session")
def basis4():
    return enumerate_basis(4)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240517)
