from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multiwalk.chain import (
    GuardError,
    conductance,
    conductance_minimizer,
    distance_profile,
    ergodic_flow,
    hit_probability_within,
    hitting_expectation,
    large_hit_time,
    mixing_time,
    partial_mixing_time,
    relaxation_time,
    return_identity_partial,
    return_sum,
    separation_time,
    set_conductance,
    stationary_hitting_all,
    transition_fractions,
    transition_matrix,
)
from multiwalk.graphs import FamilySpec, build_reset_graph, connected_graphs

from conftest import family


def test_transition_matrices(k2, c4):
    assert np.allclose(transition_matrix(k2).P, 0.5)
    P = transition_matrix(c4).P
    assert np.allclose(np.diag(P), 0.5)
    assert P[0, 1] == P[0, 3] == 0.25 and P[0, 2] == 0
    fr = transition_fractions(c4)
    assert fr[0][1] == Fraction(1, 4)


def test_reset_graph_rows(k2):
    r = build_reset_graph(k2, 0.5)
    P = transition_matrix(r.graph, lazy=False).P
    assert P[0, 1] == pytest.approx(0.5) and P[0, r.z] == pytest.approx(0.5)


def test_dense_guard():
    with pytest.raises(GuardError):
        transition_matrix(family("cycle", n=64), max_n=32)


def test_distance_profile_k2(k2):
    prof = distance_profile(transition_matrix(k2), 4)
    assert prof.d[1] == pytest.approx(0) and prof.s[1] == pytest.approx(0)
    assert mixing_time(transition_matrix(k2)) == 1


def test_distance_profile_c4(c4):
    prof = distance_profile(transition_matrix(c4), 64)
    assert prof.s[1] == pytest.approx(1.0)
    assert prof.s[2] == pytest.approx(0.5)
    assert np.all(np.diff(prof.d[1:]) <= 1e-12)
    assert np.all(np.diff(prof.s[1:]) <= 1e-12)
    assert np.all(prof.d <= prof.s + 1e-12)
    header = prof.to_csv().splitlines()[0]
    assert header == "t,d,s"


def test_partial_mixing_examples(k2, c4):
    tm = transition_matrix(c4)
    assert partial_mixing_time(tm, 1, 4) == 2
    assert partial_mixing_time(transition_matrix(k2), 1, 2) == 1
    assert partial_mixing_time(transition_matrix(k2), 3, 7) == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 20), st.integers(2, 40), st.integers(1, 39), st.integers(1, 39))
def test_partial_mixing_monotone_in_k_tilde(idx, k, a, b):
    graphs = connected_graphs(5)
    tm = transition_matrix(graphs[idx % len(graphs)])
    a, b = sorted((a % (k - 1)) + 1 for a in (a, b))
    assert partial_mixing_time(tm, a, k) <= partial_mixing_time(tm, b, k)


def test_hit_probability_examples(c4):
    tm = transition_matrix(c4)
    assert hit_probability_within(tm, [2], 1)[0] == pytest.approx(0)
    assert hit_probability_within(tm, [2], 3)[0] == pytest.approx(0.25)
    assert np.allclose(hit_probability_within(tm, range(4), 5), 1.0)


def test_large_hit_examples(k2, c4):
    res = large_hit_time(transition_matrix(c4), 1, 4)
    assert res.time == 3 and res.provenance == "exact"
    assert large_hit_time(transition_matrix(k2), 1, 2).time == 1


def test_large_hit_at_most_twice_partial_mixing():
    for g in connected_graphs(5):
        tm = transition_matrix(g)
        for k in (8, 16):
            for kt in range(1, k // 4):
                if 4 * kt < k:
                    assert large_hit_time(tm, kt, k).time <= 2 * partial_mixing_time(tm, 4 * kt, k)


def test_large_hit_catalog_is_upper_bound():
    spec = FamilySpec("cycle", n=12)
    g = family("cycle", n=12)
    tm = transition_matrix(g)
    exact = large_hit_time(tm, 1, 4)
    cat = large_hit_time(tm, 1, 4, "catalog", graph=g, spec=spec)
    assert cat.provenance == "catalog-upper-bound"
    assert cat.time <= exact.time


def test_relaxation_examples(k2, c4):
    s = relaxation_time(transition_matrix(k2))
    assert s.lambda2 == pytest.approx(0, abs=1e-12) and s.t_rel == pytest.approx(1)
    s = relaxation_time(transition_matrix(c4))
    assert s.lambda2 == pytest.approx(0.5) and s.t_rel == pytest.approx(2)
    for n in (5, 9):
        tm = transition_matrix(family("clique", n=n))
        # lazy complete graph: second eigenvalue (1 - 1/(n-1))/2
        assert relaxation_time(tm).lambda2 == pytest.approx(0.5 * (1 - 1 / (n - 1)))
        dense = np.sort(np.linalg.eigvalsh(tm.P))[-2]
        assert relaxation_time(tm).lambda2 == pytest.approx(dense)


def test_return_sums(c4):
    tm = transition_matrix(c4)
    assert return_sum(tm, 0, 2) == pytest.approx(15 / 8)
    assert return_sum(tm, 3, 0) == pytest.approx(1)


def _hypercube_return(d, t):
    # lazy walk on {0,1}^d: P^t(v, v) = 2^-d sum_j C(d, j) (1 - j/d)^t
    from math import comb
    return sum(comb(d, j) * (1 - j / d) ** s for s in range(t + 1) for j in range(d + 1)) / 2 ** d


def test_hypercube_return_sum_near_two():
    hc = transition_matrix(family("hypercube", d=10))
    t_rel = int(round(relaxation_time(hc).t_rel))
    assert t_rel == 10
    value = return_sum(hc, 0, t_rel)
    assert value == pytest.approx(_hypercube_return(10, 10))
    # the excess over 2 is o(1) in d
    excess = [_hypercube_return(d, d) - 2 for d in (10, 20, 40, 80)]
    assert 1 <= value and all(a > b > 0 for a, b in zip(excess, excess[1:]))
    assert excess[-1] < 0.05


def test_hitting_examples(k2, c4):
    h = hitting_expectation(transition_matrix(k2), 1)
    assert h.to_target[0] == pytest.approx(2) and h.to_target[1] == 0
    h = hitting_expectation(transition_matrix(c4), 0)
    assert h.from_stationary == pytest.approx(5)
    assert stationary_hitting_all(transition_matrix(c4)) == pytest.approx([5] * 4)
    # sum_t (P^t(v,v) - pi(v)) converges to pi(v) E_pi[tau_v]
    assert return_identity_partial(transition_matrix(c4), 0, 400) == pytest.approx(0.25 * 5, rel=1e-9)


def test_conductance_examples(c4):
    tm = transition_matrix(c4)
    assert conductance(tm) == pytest.approx(0.25)
    assert set_conductance(tm, [0]) == pytest.approx(0.5)
    phi, members = conductance_minimizer(tm)
    assert phi == pytest.approx(0.25) and len(members) == 2


def test_clique_conductance():
    n = 5
    tm = transition_matrix(family("clique", n=n))
    h = n // 2
    # lazy: Q(S, S^c) = |S||S^c| / (2 * 2m), pi(S) = |S|/n
    closed = (h * (n - h) / (2 * n * (n - 1))) / (h / n)
    assert conductance(tm) == pytest.approx(closed)
    assert set_conductance(tm, range(h)) == pytest.approx(closed)


def test_flow_symmetry():
    tm = transition_matrix(family("barbell", n=8))
    S, Sc = [0, 1, 5], [2, 3, 4, 6, 7]
    assert ergodic_flow(tm, S, Sc) == pytest.approx(ergodic_flow(tm, Sc, S))


def test_separation_time_exists(c4):
    assert separation_time(transition_matrix(c4)) == 3
