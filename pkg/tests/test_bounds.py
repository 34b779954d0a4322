import csv
import io
import math

import pytest

from multiwalk import bounds as B
from multiwalk.bounds import (
    GraphQuantities,
    Quantity,
    eval_char_lower,
    eval_char_upper,
    eval_geometric_bounds,
    eval_partial_mixing_bounds,
    eval_stationary_lower,
    eval_stationary_upper,
    fmt,
    log4_ceiling_factor,
    regime_thresholds,
    reports_to_csv,
    table1_reference,
)


def quantities(family="cycle", n=64, m=64, d_min=2, pi_max=None, **kw):
    return GraphQuantities(family=family, n=n, m=m, d_min=d_min, pi_max=pi_max or 1 / n, **kw)


def by_id(reports):
    return {r.bound_id: r for r in reports}


def test_edge_ratio_rhs_cycle64():
    q = quantities(cover_pi={8: Quantity(900.0, B.ESTIMATED, 10.0)})
    rep = by_id(eval_stationary_upper(q, 8))["stationary_upper_edge_ratio"]
    # (m / (k d_min))^2 ln^2 n with m = 64, d_min = 2
    assert rep.rhs == pytest.approx((64 / (8 * 2)) ** 2 * math.log(64) ** 2)
    assert round(rep.rhs, 1) == 276.7
    assert rep.status == "pass" and rep.constant == 8


def test_upper_uses_standard_error_allowance():
    q = quantities(n=4, m=4, cover_pi={4: Quantity(10.0, B.ESTIMATED, 1.0)})
    rhs = (4 / 8) ** 2 * math.log(4) ** 2
    # lhs - 3 se sits just below C * rhs: pass; one more se: fail
    q.cover_pi[4] = Quantity(8 * rhs + 2.9, B.ESTIMATED, 1.0)
    assert by_id(eval_stationary_upper(q, 4))["stationary_upper_edge_ratio"].status == "pass"
    q.cover_pi[4] = Quantity(8 * rhs + 3.1, B.ESTIMATED, 1.0)
    rep = by_id(eval_stationary_upper(q, 4))["stationary_upper_edge_ratio"]
    assert rep.status == "fail" and rep.failed


def test_gated_bounds_skip_without_gates():
    q = quantities(cover_pi={1: Quantity(100.0)})
    reps = by_id(eval_stationary_upper(q, 1))
    assert reps["stationary_constant_return"].status == "skipped"
    assert reps["stationary_upper_hitting"].status == "skipped"
    q.gates = {"constant_return": True, "harmonic_return": False}
    reps = by_id(eval_stationary_upper(q, 1))
    assert reps["stationary_constant_return"].status == "pass"
    assert reps["stationary_harmonic_return"].note == "hypotheses not met numerically"


def test_missing_estimate_is_skipped():
    q = quantities()
    assert all(r.status == "skipped" for r in eval_stationary_upper(q, 3))


def test_stationary_lower_examples():
    q = quantities(family="hypercube", n=1024, m=5120, d_min=10, cover_pi={16: Quantity(1000.0)})
    rep = eval_stationary_lower(q, 16)
    assert rep.constant * rep.rhs == pytest.approx(0.01 * 64 * math.log(1024))
    assert round(rep.constant * rep.rhs, 1) == 4.4 and rep.status == "pass"
    q = quantities(family="clique", n=1024, cover_pi={1: Quantity(1000.0)})
    assert eval_stationary_lower(q, 1).constant * eval_stationary_lower(q, 1).rhs == pytest.approx(70.98, abs=0.01)
    big = 10**6
    q.cover_pi[big] = Quantity(1.0)
    assert eval_stationary_lower(q, big).status == "skipped"


def test_char_upper_k2():
    q = quantities(family="clique", n=2, m=1, d_min=1, pi_max=0.5,
                   partial_mix={(1, 2): Quantity(1.0)},
                   cover_pi={1: Quantity(2.0, B.ESTIMATED, 0.05)},
                   cover_worst={2: Quantity(1.33, B.ESTIMATED, 0.05)})
    rep = eval_char_upper(q, 2)
    assert rep.status == "pass" and rep.k_tilde == 1
    assert rep.rhs == pytest.approx(2.0)


def test_char_upper_picks_grid_minimizer():
    q = quantities(partial_mix={(1, 16): Quantity(500.0), (2, 16): Quantity(300.0), (4, 16): Quantity(200.0)},
                   cover_pi={1: Quantity(4000.0), 2: Quantity(1000.0), 4: Quantity(250.0)},
                   cover_worst={16: Quantity(1000.0)})
    rep = eval_char_upper(q, 16)
    assert rep.k_tilde == 4 and rep.rhs == pytest.approx(250.0)


def test_char_lower_hit_c4():
    q = quantities(n=4, m=4, pi_max=0.25, large_hit={(1, 4): Quantity(3.0)},
                   cover_worst={4: Quantity(2.0, B.ESTIMATED, 0.05)})
    rep = eval_char_lower(q, 4, "hit")
    assert rep.constant * rep.rhs == pytest.approx(3 / 16)
    assert rep.status == "pass" and not rep.advisory


def test_char_lower_variants():
    q = quantities(n=4, m=4, pi_max=0.25, large_hit={(1, 2): Quantity(2.0)},
                   cover_worst={2: Quantity(2.0)}, large_cover={1: Quantity(5.0, B.ESTIMATED, 0.1)})
    rep = eval_char_lower(q, 2, "cycle")
    assert rep.k_tilde == 1 and rep.rhs == pytest.approx(2.0) and rep.advisory
    assert eval_char_lower(q, 2, "regular").status == "skipped"
    with pytest.raises(ValueError):
        eval_char_lower(q, 2, "other")


def test_log4_factor():
    assert log4_ceiling_factor(1, 2) == 2  # 4k/(k-kt) = 8
    assert log4_ceiling_factor(1, 4) == 2  # 16/3
    assert log4_ceiling_factor(32, 64) == 2
    assert log4_ceiling_factor(0, 4) == 1  # exactly 4
    assert log4_ceiling_factor(63, 64) == 4  # 256


def test_partial_mixing_bounds():
    q = quantities(n=4, m=4, t_mix=Quantity(1.0), partial_mix={(1, 4): Quantity(2.0), (1, 8): Quantity(2.0),
                                                               (4, 8): Quantity(3.0)},
                   tv_mix={(1, 4): Quantity(1.0)}, large_hit={(1, 4): Quantity(3.0), (1, 8): Quantity(2.0)})
    reps = by_id(eval_partial_mixing_bounds(q, 1, 4))
    assert reps["partial_mix_upper_log4"].status == "pass"
    assert reps["partial_mix_upper_log4"].rhs == 2
    assert reps["large_hit_upper_mixing"].advisory
    assert reps["partial_mix_lower_tv"].status == "pass"
    assert "large_hit_upper_partial_mix" not in reps  # needs 4 kt < k
    reps = by_id(eval_partial_mixing_bounds(q, 1, 8))
    assert reps["large_hit_upper_partial_mix"].rhs == pytest.approx(4.0)


def test_geometric_bounds():
    q = quantities(family="torus", n=1024, m=2048, d_min=4, phi=Quantity(0.05),
                   large_hit={(1, 4): Quantity(40.0)}, partial_mix={(1, 4): Quantity(100.0)})
    ctx = {"dimension": 2, "displacement": [(8, 16, 0.1, 0.01)]}
    reps = by_id(eval_geometric_bounds(q, 1, 4, ctx))
    disp = reps["displacement_tail_D8_t16"]
    assert disp.rhs == pytest.approx(4 * math.exp(-64 / 128))
    assert disp.status == "pass" and not disp.advisory
    assert reps["large_hit_lower_conductance"].advisory
    assert reps["torus_partial_mix_shape"].advisory


def test_table1_references():
    ref = table1_reference("cycle", 256, 16)
    assert round(ref.stationary) == 1968
    assert ref.worst_case == pytest.approx(256**2 / math.log(16))
    tree = table1_reference("binary_tree", 2047, 4)
    assert tree.worst_regime == "k<=ln^2 n"
    assert tree.worst_case == pytest.approx(2047 / 4 * math.log(2047) ** 2)
    hc = table1_reference("hypercube", 1024, 1024)
    assert hc.worst_regime == "k>n/lnln n"
    assert hc.worst_case == pytest.approx(math.log(1024) * math.log(math.log(1024)))
    single = table1_reference("clique", 100, 1)
    assert single.worst_case == single.stationary
    assert regime_thresholds("cycle", 100) is None
    with pytest.raises(ValueError):
        table1_reference("cycle", 2, 1)


def test_table1_branches_meet_at_threshold():
    n = 4096
    thr = regime_thresholds("torus", n)
    k = math.floor(thr)
    below = table1_reference("torus", n, k).worst_case
    above = table1_reference("torus", n, k + 1).worst_case
    assert above / below == pytest.approx(1.0, rel=0.1)


def test_csv_columns_and_format():
    q = quantities(cover_pi={8: Quantity(900.123456789123, B.ESTIMATED, 10.0)})
    text = reports_to_csv(eval_stationary_upper(q, 8))
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == B.CSV_COLUMNS
    assert rows[1][6] == "900.123457"
    assert fmt(1 / 3) == "0.333333333" and fmt(None) == "" and fmt(7) == "7"
