import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from reference_data import C13_COORDS  # noqa: E402

from ifclust import Cluster, IndexCluster, LennardJones, Sublattice, gen_if  # noqa: E402


@pytest.fixture(scope="session")
def lj():
    return LennardJones()


@pytest.fixture(scope="session")
def lat1():
    return gen_if(1)


@pytest.fixture(scope="session")
def lat2():
    return gen_if(2)


@pytest.fixture
def c13_cluster():
    return Cluster(C13_COORDS)


@pytest.fixture
def c13_idx(lat2):
    members = frozenset(
        s.index for s in lat2.sites if s.shell <= 1 and s.sublattice is Sublattice.IC
    )
    assert len(members) == 13
    return IndexCluster(lat2, members)
