import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multiwalk.chain import conductance, large_hit_time, transition_matrix
from multiwalk.graphs import WeightedGraph, connected_graphs
from multiwalk.oracle import (
    OracleGuardError,
    ProductChain,
    check_tail_lemma,
    exact_cover_tail,
    exact_multiwalk_cover_expectation,
    exhaustive_conductance,
    exhaustive_large_hit,
    exp_power_inequality,
    random_tail_instance,
    visit_count_checks,
)
from multiwalk.walks import AllAtVertex, ExplicitTuple, StationaryProduct

from conftest import family


def test_small_cover_expectations(k2):
    assert exact_multiwalk_cover_expectation(k2, 1, AllAtVertex(0)) == pytest.approx(2)
    assert exact_multiwalk_cover_expectation(family("cycle", n=3), 1, AllAtVertex(0)) == pytest.approx(6)
    assert exact_multiwalk_cover_expectation(k2, 2, ExplicitTuple((0, 1))) == 0


def test_non_lazy_is_half_of_lazy():
    g = family("cycle", n=5)
    lazy = exact_multiwalk_cover_expectation(g, 1, AllAtVertex(0), lazy=True)
    plain = exact_multiwalk_cover_expectation(g, 1, AllAtVertex(0), lazy=False)
    assert lazy == pytest.approx(2 * plain)
    # non-lazy single-walk cycle cover from a vertex: n(n-1)/2
    assert plain == pytest.approx(10)


def test_tail_boundary_values(k2):
    tail = exact_cover_tail(k2, 1, AllAtVertex(0), 5)
    assert tail[0] == 1.0
    assert tail == pytest.approx([0.5**s for s in range(6)])


def test_k2_two_walks_stationary_tail(k2):
    # not covered after one step iff both start together (1/2) and neither moves (1/4)
    tail = exact_cover_tail(k2, 2, StationaryProduct(), 1)
    assert tail == pytest.approx([0.5, 0.125])


def test_inclusion_exclusion_matches_product_chain():
    for g in (family("cycle", n=4), family("binary_tree", height=1), connected_graphs(4)[3]):
        tm = transition_matrix(g)
        for chk in visit_count_checks(tm, (1, 2, 3), 20):
            direct = exact_cover_tail(g, chk.k, StationaryProduct(), 20)
            # tail[t-1] = P(tau >= t) = P(tau > t-1)
            assert chk.tail == pytest.approx(direct[:20], abs=1e-12)


def test_visit_statements_on_c4(c4):
    tm = transition_matrix(c4)
    for chk in visit_count_checks(tm, (1, 2, 4), 32):
        assert chk.union_violations == 0
        assert chk.identity_gap < 1e-9
        assert chk.lower_violations == 0


def test_exhaustive_large_hit_matches_chain(c4, k2):
    assert exhaustive_large_hit(transition_matrix(c4), 1, 4) == 3
    assert exhaustive_large_hit(transition_matrix(k2), 1, 2) == 1
    for g in connected_graphs(4):
        tm = transition_matrix(g)
        for kt, k in ((1, 2), (1, 4), (3, 8)):
            assert exhaustive_large_hit(tm, kt, k) == large_hit_time(tm, kt, k).time


def test_exhaustive_conductance(c4):
    assert exhaustive_conductance(transition_matrix(c4)).phi == pytest.approx(0.25)
    n = 5
    tm = transition_matrix(family("clique", n=n))
    res = exhaustive_conductance(tm)
    assert len(res.members) in (n // 2, n - n // 2)
    assert res.phi == pytest.approx((2 * 3 / (2 * n * (n - 1))) / (2 / n))
    for g in connected_graphs(5):
        tm = transition_matrix(g)
        assert exhaustive_conductance(tm).phi == pytest.approx(conductance(tm))


def test_guards():
    with pytest.raises(OracleGuardError):
        ProductChain(family("cycle", n=16), 3)


def test_tail_lemma_instances():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        ok, lhs, rhs = check_tail_lemma(random_tail_instance(rng))
        assert ok, (lhs, rhs)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 10**6), st.floats(-1, 1))
def test_exp_power_inequality(n, frac):
    x = frac * n
    ok, slack = exp_power_inequality(x, n)
    assert ok
    if n < 500 and x * x < n:
        assert (1 + x / n) ** n >= math.exp(x) * (1 - x * x / n) * (1 - 1e-9)


def test_exp_power_domain():
    with pytest.raises(ValueError):
        exp_power_inequality(5.0, 4)
