import numpy as np
import pytest
from scipy import stats

from multiwalk.graphs import WeightedGraph
from multiwalk.oracle import exact_multiwalk_cover_expectation
from multiwalk.walks import (
    AllAtVertex,
    DistributionOnSet,
    EstimateWithCI,
    ExplicitTuple,
    StationaryProduct,
    WalkEngine,
    default_horizon,
    displacement_tail,
    estimate_cover_time,
    estimate_set_cover,
    estimate_set_hitting,
    reset_walk_equivalence,
    sample_cover_time,
    trial_rng,
    worst_single_source,
)

from conftest import family


def within(est: EstimateWithCI, value: float, z: float = 3.0) -> bool:
    return abs(est.mean - value) <= z * max(est.std_error, 1e-12)


def test_covered_at_start(k2):
    est = estimate_cover_time(k2, 2, ExplicitTuple((0, 1)), trials=10)
    assert est.mean == 0 and est.std_error == 0


def test_k2_non_lazy_is_deterministic(k2):
    est = estimate_cover_time(k2, 1, AllAtVertex(0), lazy=False, trials=20)
    assert est.mean == 1 and est.std_error == 0


def test_k2_lazy(k2):
    assert within(estimate_cover_time(k2, 1, AllAtVertex(0), trials=4000, master_seed=1), 2.0)


def test_triangle_lazy():
    g = family("cycle", n=3)
    assert within(estimate_cover_time(g, 1, AllAtVertex(0), trials=4000, master_seed=2), 6.0)


def test_c4_matches_oracle(c4):
    for k, start in ((1, AllAtVertex(0)), (2, StationaryProduct()), (3, AllAtVertex(1))):
        exact = exact_multiwalk_cover_expectation(c4, k, start)
        assert within(estimate_cover_time(c4, k, start, trials=3000, master_seed=3), exact)


def test_clique_coupon_collector():
    n = 64
    g = family("clique", n=n)
    est = estimate_cover_time(g, 1, StationaryProduct(), trials=400, master_seed=4)
    # each non-lazy step hits a uniform other vertex; laziness doubles
    ref = 2 * (n - 1) * sum(1 / i for i in range(1, n))
    assert abs(est.mean / ref - 1) < 0.10


def test_weighted_walk_frequencies():
    # a star with unequal weights: the first move follows the weights
    g = WeightedGraph.from_edges(3, [(0, 1, 1.0), (0, 2, 3.0)])
    eng = WalkEngine(g)
    paths = eng.paths(np.zeros(20000, dtype=np.int64), 1, False, np.random.default_rng(0))
    frac = np.mean(paths[:, 1] == 2)
    assert frac == pytest.approx(0.75, abs=0.015)


def test_set_hitting():
    c4 = family("cycle", n=4)
    est = estimate_set_hitting(c4, 2, ExplicitTuple((0, 2)), [2], trials=10)
    assert est.mean == 0
    est = estimate_set_hitting(c4, 1, AllAtVertex(0), [2], trials=4000, master_seed=5)
    assert within(est, 8.0)


def test_more_walks_hit_sooner():
    g = family("cycle", n=32)
    eng = WalkEngine(g)
    target = np.zeros(32, dtype=np.bool_)
    target[16] = True
    one = [eng.run(np.zeros(1, np.int64), target, 0, True, 10**6, trial_rng(1, i))[0] for i in range(600)]
    two = [eng.run(np.zeros(2, np.int64), target, 0, True, 10**6, trial_rng(2, i))[0] for i in range(600)]
    assert stats.mannwhitneyu(two, one, alternative="less").pvalue < 1e-3
    # empirical CDF of the two-walk time lies above the one-walk CDF
    grid = np.quantile(one, np.linspace(0.05, 0.95, 19))
    assert all(np.mean(np.less_equal(two, x)) >= np.mean(np.less_equal(one, x)) - 0.05 for x in grid)


def test_set_cover_trivial():
    g = family("cycle", n=10)
    est = estimate_set_cover(g, 1, [3], DistributionOnSet.point([3], 3), trials=5)
    assert est.mean == 0


def _arc_cover_from_endpoint(N: int, d: int) -> float:
    """Exact lazy expected time for a walk started at one end of an arc of d+1
    vertices on the N-cycle to visit the whole arc.

    Lift to Z with range [-l, r] and position x. The arc is covered once
    r = d, or once the range spans the cycle (l + r = N - 1).
    """
    import scipy.sparse as sp
    from scipy.sparse.linalg import spsolve

    index = {}
    for l in range(N):
        for r in range(d):
            if l + r < N - 1:
                for x in range(-l, r + 1):
                    index[(l, r, x)] = len(index)
    rows, cols, vals = [], [], []
    for (l, r, x), i in index.items():
        rows.append(i), cols.append(i), vals.append(1.0)
        for y in (x - 1, x + 1):
            j = index.get((max(l, -y), max(r, y), y))
            if j is not None:
                rows.append(i), cols.append(j), vals.append(-0.5)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(len(index),) * 2)
    h = spsolve(A, np.ones(len(index)))
    return 2.0 * h[index[(0, 0, 0)]]


def test_interval_cover_from_endpoints():
    N = 64
    g = family("cycle", n=N)
    for size in (8, 16, 32):
        S = list(range(32 - size // 2, 32 + size // 2))
        mu = DistributionOnSet.uniform_on(S, [S[0], S[-1]])
        est = estimate_set_cover(g, 1, S, mu, trials=1500, master_seed=6)
        assert within(est, _arc_cover_from_endpoint(N, size - 1))


def test_barbell_far_clique_cover_is_finite():
    n = 32
    g = family("barbell", n=n)
    far = list(range(n // 2, n))
    bridge = [v for v in far if any(u < n // 2 for u in g.neighbors(v))]
    est = estimate_set_cover(g, 4, far, DistributionOnSet.point(far, bridge[0]), trials=200, master_seed=7)
    assert est.truncated == 0 and est.mean < n * n


def test_horizon_truncation_flags_unreliable():
    g = family("cycle", n=64)
    est = estimate_cover_time(g, 1, AllAtVertex(0), trials=50, horizon=10)
    assert est.truncated == 50 and est.unreliable
    assert default_horizon(64, 1) == 64 * 64 ** 3


def test_thread_count_does_not_change_results():
    g = family("torus", d=2, side=6)
    a = estimate_cover_time(g, 3, StationaryProduct(), trials=64, master_seed=9, threads=1)
    b = estimate_cover_time(g, 3, StationaryProduct(), trials=64, master_seed=9, threads=4)
    assert a == b


def test_trial_streams_are_independent_of_order():
    g = family("cycle", n=9)
    r1 = sample_cover_time(g, 2, StationaryProduct(), rng=trial_rng(11, 3))
    r2 = sample_cover_time(g, 2, StationaryProduct(), rng=trial_rng(11, 3))
    assert r1 == r2


def test_start_labels_and_validation(k2):
    assert AllAtVertex(1).label and StationaryProduct().label
    with pytest.raises(ValueError):
        ExplicitTuple((0, 1, 0)).sample(k2, 2, np.random.default_rng(0))
    with pytest.raises(ValueError):
        AllAtVertex(5).sample(k2, 1, np.random.default_rng(0))


def test_worst_single_source_picks_slowest():
    g = family("binary_tree", height=3)
    vertex, est = worst_single_source(g, 2, representatives=[0, 1, 7], trials=200, master_seed=12)
    each = {v: estimate_cover_time(g, 2, AllAtVertex(v), trials=200, master_seed=12) for v in (0, 1, 7)}
    assert vertex == max(each, key=lambda v: each[v].mean)
    assert est == each[vertex]


def test_reset_equivalence_small():
    k2 = WeightedGraph.from_edges(2, [(0, 1, 1.0)])
    assert reset_walk_equivalence(k2, 0.5, 10, 20000, seed=1).p_value > 0.01
    c16 = family("cycle", n=16)
    assert reset_walk_equivalence(c16, 0.1, 50, 20000, seed=2).p_value > 0.01


def test_reset_equivalence_detects_mismatch():
    # different reset rates must be told apart
    from multiwalk import walks
    from multiwalk.graphs import build_reset_graph

    c16 = family("cycle", n=16)
    a = walks._contracted_positions(build_reset_graph(c16, 0.5), 0, 6, 20000, np.random.default_rng(3))
    b = walks._geometric_reset_positions(c16, 0.05, 0, 6, 20000, np.random.default_rng(4))
    table = np.array([np.bincount(a, minlength=16), np.bincount(b, minlength=16)])
    table = table[:, table.sum(axis=0) > 0]
    assert stats.chi2_contingency(table, correction=False)[1] < 1e-6


def test_displacement_tail_bound():
    g = family("torus", d=2, side=32)
    tf = displacement_tail(g, 0, 8, 16, 20000, seed=3)
    assert tf.frequency <= 4 * np.exp(-64 / (2 * 16 * 4))
