import numpy as np
import pytest

from multiwalk.graphs import FamilySpec, WeightedGraph, build_family


def family(name, **kw):
    return build_family(FamilySpec(name, **kw))


@pytest.fixture
def k2():
    return WeightedGraph.from_edges(2, [(0, 1, 1.0)])


@pytest.fixture
def c4():
    return family("cycle", n=4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
