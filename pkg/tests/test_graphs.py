import io
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multiwalk.graphs import (
    FamilySpec,
    GraphError,
    WeightedGraph,
    build_family,
    build_reset_graph,
    canonical_hard_sets,
    connected_graphs,
    path_graph,
    read_edge_list,
    stationary_distribution,
    stationary_fractions,
    write_edge_list,
)

from conftest import family


def test_cycle_structure():
    g = family("cycle", n=4)
    assert g.n == 4 and g.m == 4
    assert list(g.degrees) == [2, 2, 2, 2]


def test_binary_tree_degrees():
    g = family("binary_tree", height=2)
    assert g.n == 7
    assert sorted(g.degrees) == [1, 1, 1, 1, 2, 3, 3]


def test_hypercube_structure():
    g = family("hypercube", d=3)
    assert g.n == 8 and g.m == 12
    assert set(g.degrees) == {3}


def test_barbell_structure():
    g = family("barbell", n=8)
    assert g.m == 13
    # exactly one edge crosses between the halves
    crossing = [(u, v) for u, v, _ in g.edges() if (u < 4) != (v < 4)]
    assert len(crossing) == 1


def test_torus_and_clique():
    t = family("torus", d=2, side=5)
    assert t.n == 25 and set(t.degrees) == {4}
    k = family("clique", n=6)
    assert k.m == 15


def test_random_families_are_seeded():
    a = family("random_regular", n=20, degree=3, seed=4)
    b = family("random_regular", n=20, degree=3, seed=4)
    assert write_edge_list(a) == write_edge_list(b)
    assert set(a.degrees) == {3}
    pa = family("preferential_attachment", n=50, m=2, seed=1)
    assert pa.n == 50 and pa.d_min >= 2


def test_spec_round_trip():
    spec = FamilySpec("torus", d=2, side=8)
    assert FamilySpec.from_dict(spec.to_dict()) == spec
    assert spec.expected_n == 64
    assert not spec.is_random


def test_bad_spec_rejected():
    with pytest.raises(GraphError):
        build_family(FamilySpec("cycle", n=2))
    with pytest.raises((GraphError, ValueError)):
        build_family(FamilySpec("nonsense", n=4))


def test_disconnected_rejected():
    with pytest.raises(GraphError):
        WeightedGraph.from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)])


def test_edge_list_round_trip():
    g = WeightedGraph.from_edges(3, [(0, 1, 2.5), (1, 2, 1.0)])
    text = write_edge_list(g)
    assert text.splitlines()[0] == "3 2"
    h = read_edge_list(io.StringIO(text))
    assert write_edge_list(h) == text
    assert h.weight(0, 1) == 2.5


def test_stationary_examples():
    assert np.allclose(stationary_distribution(family("clique", n=5)), 0.2)
    assert stationary_fractions(path_graph(3)) == [Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)]


def test_reset_graph_k2_half():
    g = WeightedGraph.from_edges(2, [(0, 1, 1.0)])
    r = build_reset_graph(g, 0.5)
    z = r.z
    assert z == 2
    assert r.graph.weight(0, z) == pytest.approx(1.0)
    assert r.graph.weight(1, z) == pytest.approx(1.0)
    # moving to z with probability exactly x forces pi(z) = (1 - pi(z)) x
    pi = stationary_distribution(r.graph)
    assert np.allclose(pi, [1 / 3, 1 / 3, 1 / 3])


def test_reset_graph_small_x():
    g = WeightedGraph.from_edges(2, [(0, 1, 1.0)])
    r = build_reset_graph(g, 1e-3)
    row = r.graph.weight(0, r.z) / r.graph.weighted_degrees[0]
    assert row == pytest.approx(1e-3)


def test_reset_graph_rejects_bad_x():
    g = WeightedGraph.from_edges(2, [(0, 1, 1.0)])
    for x in (0.0, 1.0, 1.5):
        with pytest.raises((GraphError, ValueError)):
            build_reset_graph(g, x)


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 12), st.floats(0.01, 0.9))
def test_reset_probability_and_mass(n, x):
    g = family("cycle", n=n)
    r = build_reset_graph(g, x)
    deg = r.graph.weighted_degrees
    for u in range(n):
        assert r.graph.weight(u, r.z) / deg[u] == pytest.approx(x)
    pi = stationary_distribution(r.graph)
    assert pi[r.z] == pytest.approx(x / (1 + x), rel=1e-12)
    # base vertices keep the shape of pi on G
    assert np.allclose(pi[:n] / pi[:n].sum(), stationary_distribution(g))


def test_hard_sets():
    g = family("cycle", n=8)
    sets = canonical_hard_sets(g, FamilySpec("cycle", n=8), anchor=0)
    assert sets
    dist = g.distances_from(0)
    for hs in sets:
        assert hs.mass >= 0.25 - 1e-12
    assert any(len(hs.vertices) >= 4 and dist[hs.vertices].min() >= 2 for hs in sets)

    tree = family("binary_tree", height=3)
    leaves = [hs for hs in canonical_hard_sets(tree, FamilySpec("binary_tree", height=3)) if len(hs.vertices) == 8]
    assert leaves and leaves[0].mass >= 0.25

    bb = family("barbell", n=8)
    far = canonical_hard_sets(bb, FamilySpec("barbell", n=8), anchor=0)
    assert any(abs(hs.mass - 0.5) < 0.1 for hs in far)


def test_connected_graph_counts():
    assert [len(connected_graphs(n)) for n in range(1, 6)] == [1, 1, 2, 6, 21]


@pytest.mark.slow
def test_packaged_catalogue_counts():
    assert len(connected_graphs(6)) == 112
    assert len(connected_graphs(7)) == 853
    assert len(connected_graphs(8)) == 11117
