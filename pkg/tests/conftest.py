import sys
import warnings
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tforge.formfind import find_equilibrium  # noqa: E402
from tforge.model import MaterialSpec, prism_topology  # noqa: E402


@pytest.fixture(scope="session")
def prism3():
    return prism_topology(3)


@pytest.fixture(scope="session")
def prism_mat():
    return MaterialSpec(strut_length=10.0, strut_mass=0.02, spring_stiffness=1.0, spring_free_length=3.0)


@pytest.fixture(scope="session")
def prism_eq(prism3, prism_mat):
    return find_equilibrium(prism3, prism_mat, seed=0)


@pytest.fixture(scope="session")
def prism4_eq():
    topo = prism_topology(4)
    mat = MaterialSpec(10.0, 0.02, 1.0, 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        return topo, mat, find_equilibrium(topo, mat, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
