"""The eleven acceptance criteria as callable checks.

Each ``criterion_N`` returns a :class:`CriterionResult`; the ``verify``
command and the test suite share these functions. Seeds are fixed
constants chosen before any run and are not tuned.
"""
from __future__ import annotations

import functools
import inspect
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import bounds as B
from .chain import (
    TransitionMatrix,
    large_sets_exhaustive,
    partial_mixing_time,
    transition_matrix,
)
from .graphs import (
    FamilySpec,
    binary_tree_graph,
    build_family,
    connected_graphs,
    cycle_graph,
    path_graph,
    torus_graph,
)
from .harness import derive_seed, fit_loglog_slope
from .oracle import exact_multiwalk_cover_expectation, visit_count_checks
from .walks import (
    AllAtVertex,
    StationaryProduct,
    displacement_tail,
    estimate_cover_time,
    reset_walk_equivalence,
)

SEED = 20240601


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d}: {self.title} -- {self.summary} ({self.seconds:.1f}s)"


def _timed(fn: Callable[..., CriterionResult]):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    return wrapper


def _tree_level_representatives(height: int) -> list[int]:
    """One vertex per depth of the heap-indexed binary tree (leftmost)."""
    return [2**level - 1 for level in range(height + 1)]


# -- 1 ---------------------------------------------------------------------------------

@_timed
def criterion_1(trials: int = 400, seed: int = SEED, max_n: int = 5) -> CriterionResult:
    """Monte-Carlo cover times agree with the product-chain expectation on every small graph."""
    graphs = [g for n in range(1, max_n + 1) for g in connected_graphs(n)]
    worst_z = 0.0
    misses = []
    cases = 0
    for gi, g in enumerate(graphs):
        for k in (1, 2):
            for lazy in (True, False):
                for start in (AllAtVertex(0), StationaryProduct()):
                    exact = exact_multiwalk_cover_expectation(g, k, start, lazy)
                    s = derive_seed(seed, "oracle", gi, k, lazy, start.label)
                    est = estimate_cover_time(g, k, start, lazy, trials, master_seed=s)
                    cases += 1
                    diff = abs(est.mean - exact)
                    if est.std_error == 0.0:
                        z = 0.0 if diff < 1e-9 else math.inf
                    else:
                        z = diff / est.std_error
                    worst_z = max(worst_z, z)
                    if z > 3.0:
                        misses.append((gi, g.n, k, lazy, start.label, exact, est.mean, est.std_error))
    passed = not misses
    return CriterionResult(
        1, "oracle equivalence on small graphs", passed,
        f"{len(graphs)} graphs, {cases} cases, worst |z|={worst_z:.2f}, misses={len(misses)}",
        details={"graphs": len(graphs), "cases": cases, "misses": misses, "worst_z": worst_z},
    )


# -- 2 ---------------------------------------------------------------------------------

PAIRS_K = (2, 3, 4, 8, 16)
VISIT_KS = (1, 2, 4, 8)
TOL = 1e-9


def _profile_until(tm: TransitionMatrix, s_target: float, t_cap: int = 100_000):
    """d(t), s(t) for t = 0.. until s(t) <= s_target."""
    pi = tm.pi
    Pt = np.eye(tm.P.shape[0])
    d, s = [], []
    t = 0
    while True:
        d.append(0.5 * np.abs(Pt - pi).sum(axis=1).max())
        s.append(max(0.0, float((1.0 - Pt / pi).max())))
        if s[-1] <= s_target or t >= t_cap:
            break
        Pt = Pt @ tm.P
        t += 1
    return np.array(d), np.array(s)


def _first(arr: np.ndarray, eps: float, t_min: int = 0) -> int | None:
    idx = np.flatnonzero(arr[t_min:] <= eps + 1e-12)
    return int(idx[0]) + t_min if idx.size else None


def _large_hit_curve(tm: TransitionMatrix, thresholds: list[float]) -> dict[float, int]:
    """Exhaustive large-hit time for each threshold from one batched iteration."""
    masks = large_sets_exhaustive(tm.pi)
    H = masks.astype(float)
    out = {}
    pending = sorted(set(thresholds))
    t = 0
    while pending:
        t += 1
        H = np.where(masks, 1.0, tm.P @ H)
        m = H.min()
        while pending and m >= pending[0] - 1e-12:
            out[pending.pop(0)] = t
        if t > 10**6:
            raise RuntimeError("large-hit iteration did not converge")
    return out


def inequality_suite(g) -> dict:
    """Exact inequality checks for one graph; returns violation counts by name."""
    tm = transition_matrix(g, lazy=True)
    n = g.n
    v = {"d_le_s": 0, "monotone": 0, "tv_lower": 0, "log4_upper": 0, "large_hit_upper": 0,
         "visit_union": 0, "visit_identity": 0, "visit_lower": 0}
    pairs = [(kt, k) for k in PAIRS_K for kt in range(1, k)]
    if n == 1:
        return v
    d, s = _profile_until(tm, 1.0 / max(PAIRS_K) - 1e-15)
    v["d_le_s"] += int(np.count_nonzero(d > s + TOL))
    v["monotone"] += int(np.count_nonzero(np.diff(d) > TOL) + np.count_nonzero(np.diff(s) > TOL))
    tmix = _first(d, 0.25)
    pm = {p: _first(s, 1.0 - p[0] / p[1], 1) for p in pairs}
    for kt, k in pairs:
        tv = _first(d, 1.0 - kt / k)
        if pm[(kt, k)] < tv:
            v["tv_lower"] += 1
        if pm[(kt, k)] > 2 * tmix * B.log4_ceiling_factor(kt, k):
            v["log4_upper"] += 1
    lh_pairs = [(kt, k) for kt, k in pairs if 4 * kt < k]
    curve = _large_hit_curve(tm, [kt / k for kt, k in lh_pairs])
    for kt, k in lh_pairs:
        pm4 = pm[(4 * kt, k)]
        if curve[kt / k] > min(pm4 + 1, 2 * pm4):
            v["large_hit_upper"] += 1
    t_visit = max(16, 2 * n * n)
    for chk in visit_count_checks(tm, VISIT_KS, t_visit):
        v["visit_union"] += chk.union_violations
        v["visit_lower"] += chk.lower_violations
        if chk.identity_gap > 1e-9:
            v["visit_identity"] += 1
    return v


@_timed
def criterion_2(max_n: int = 8) -> CriterionResult:
    """Zero violations of the exact inequality suite on every connected graph with n <= max_n."""
    totals: dict[str, int] = {}
    count = 0
    offenders: dict[str, list] = {}
    for n in range(1, max_n + 1):
        for gi, g in enumerate(connected_graphs(n)):
            res = inequality_suite(g)
            count += 1
            for key, val in res.items():
                totals[key] = totals.get(key, 0) + val
                if val and len(offenders.setdefault(key, [])) < 5:
                    offenders[key].append((n, gi))
    bad = {k: v for k, v in totals.items() if v}
    passed = not bad
    summary = f"{count} graphs, violations: " + (", ".join(f"{k}={v}" for k, v in sorted(bad.items())) or "none")
    return CriterionResult(2, "exact inequality suite on graphs with n <= 8", passed, summary,
                           details={"totals": totals, "offenders": offenders, "graphs": count})


# -- 3 ---------------------------------------------------------------------------------

@_timed
def criterion_3(n: int = 1024, ks=(8, 16, 32, 64), trials: int = 400, seed: int = SEED,
                threads: int = 1) -> CriterionResult:
    """Normalised stationary cover time on the cycle is flat in k and the slope is near -2."""
    g = cycle_graph(n)
    pts, ratios = [], []
    for k in ks:
        est = estimate_cover_time(g, k, StationaryProduct(), True, trials,
                                  master_seed=derive_seed(seed, "c3", n, k), threads=threads)
        pts.append((k, est.mean))
        ratios.append(est.mean * k**2 / (n**2 * math.log(k) ** 2))
    spread = max(ratios) / min(ratios)
    fit = fit_loglog_slope(pts)
    # slope of the law (n/k)^2 ln^2 k itself over the same grid, for context
    law = fit_loglog_slope([(k, (n / k) ** 2 * math.log(k) ** 2) for k in ks]).slope
    passed = spread <= 3.0 and -2.3 <= fit.slope <= -1.6
    return CriterionResult(3, "cycle stationary scaling", passed,
                           f"ratio spread {spread:.2f} (<=3), slope {fit.slope:.3f} in [-2.3,-1.6] "
                           f"(law's own slope {law:.3f})",
                           details={"points": pts, "ratios": ratios, "slope": fit.slope, "law_slope": law})


# -- 4 ---------------------------------------------------------------------------------

@_timed
def criterion_4(n: int = 512, trials: int = 400, seed: int = SEED, threads: int = 1) -> CriterionResult:
    """Single-source cycle cover time speeds up like ln k between k = 4 and k = 64."""
    g = cycle_graph(n)
    est = {}
    for k in (4, 64):
        est[k] = estimate_cover_time(g, k, AllAtVertex(0), True, trials,
                                     master_seed=derive_seed(seed, "c4", n, k), threads=threads)
    ratio = est[4].mean / est[64].mean
    target = math.log(64) / math.log(4)
    passed = 0.6 * target <= ratio <= 1.4 * target
    return CriterionResult(4, "cycle worst-case speed-up", passed,
                           f"t(4)/t(64) = {ratio:.3f}, window [{0.6 * target:.2f}, {1.4 * target:.2f}]",
                           details={"t4": est[4].mean, "t64": est[64].mean, "ratio": ratio})


# -- 5 ---------------------------------------------------------------------------------

def table1_specs_1024() -> list[FamilySpec]:
    return [
        FamilySpec("binary_tree", height=9),
        FamilySpec("cycle", n=1024),
        FamilySpec("torus", d=2, side=32),
        FamilySpec("torus", d=3, side=10),
        FamilySpec("hypercube", d=10),
        FamilySpec("random_regular", n=1024, degree=4, seed=1),
        FamilySpec("preferential_attachment", n=1024, m=2, seed=1),
        FamilySpec("barbell", n=1024),
        FamilySpec("clique", n=1024),
    ]


@_timed
def criterion_5(ks=(1, 4, 16, 64), trials: int = 100, seed: int = SEED, threads: int = 1,
                c: float = 0.01) -> CriterionResult:
    """Stationary cover time is at least c (n/k) ln n on every family near n = 1024."""
    failures, rows = [], []
    for spec in table1_specs_1024():
        g = build_family(spec)
        for k in ks:
            est = estimate_cover_time(g, k, StationaryProduct(), True, trials,
                                      master_seed=derive_seed(seed, "c5", spec.label, k), threads=threads)
            rhs = c * g.n / k * math.log(g.n)
            rows.append((spec.label, k, est.mean, rhs))
            if est.mean < rhs:
                failures.append((spec.label, k, est.mean, rhs))
    worst = min(r[2] / r[3] for r in rows)
    return CriterionResult(5, "general stationary lower bound", not failures,
                           f"{len(rows)} cases, min lhs/rhs = {worst:.1f}, failures={len(failures)}",
                           details={"rows": rows, "failures": failures})


# -- 6 ---------------------------------------------------------------------------------

def _c6_specs():
    return [
        (FamilySpec("cycle", n=256), [0]),
        (FamilySpec("binary_tree", height=8), _tree_level_representatives(8)),
        (FamilySpec("hypercube", d=8), [0]),
        (FamilySpec("torus", d=2, side=16), [0]),
    ]


@_timed
def criterion_6(ks=(4, 16, 64), trials: int = 400, seed: int = SEED, threads: int = 1) -> CriterionResult:
    """Single-source worst-case cover time is at most 16 min_kt max(partial mixing, stationary cover)."""
    failures, rows = [], []
    for spec, reps in _c6_specs():
        g = build_family(spec)
        tm = transition_matrix(g)
        cover_pi = {}
        grid = sorted({2**j for j in range(0, 7) if 2**j < max(ks)})
        for kt in grid:
            est = estimate_cover_time(g, kt, StationaryProduct(), True, trials,
                                      master_seed=derive_seed(seed, "c6pi", spec.label, kt), threads=threads)
            cover_pi[kt] = est
        for k in ks:
            best = None
            for kt in (x for x in grid if x < k):
                pm = partial_mixing_time(tm, kt, k)
                cov = cover_pi[kt]
                val, se = (pm, 0.0) if pm >= cov.mean else (cov.mean, cov.std_error)
                if best is None or val < best[1]:
                    best = (kt, val, se)
            worst = None
            for v in reps:
                est = estimate_cover_time(g, k, AllAtVertex(v), True, trials,
                                          master_seed=derive_seed(seed, "c6w", spec.label, k, v), threads=threads)
                if worst is None or est.mean > worst[1].mean:
                    worst = (v, est)
            rhs = 16 * best[1]
            allowance = 3 * math.hypot(worst[1].std_error, 16 * best[2])
            ok = worst[1].mean <= rhs + allowance
            rows.append((spec.label, k, worst[0], worst[1].mean, best[0], rhs))
            if not ok:
                failures.append(rows[-1])
    worst_ratio = max(r[3] / r[5] for r in rows)
    return CriterionResult(6, "min-max upper characterization (constant 16)", not failures,
                           f"{len(rows)} cases, max lhs/rhs = {worst_ratio:.3f}, failures={len(failures)}",
                           details={"rows": rows, "failures": failures})


# -- 7 ---------------------------------------------------------------------------------

@_timed
def criterion_7(ks=(1, 4, 16), trials: int = 200, seed: int = SEED, threads: int = 1) -> CriterionResult:
    """Normalised stationary cover time t k / (n ln n) is stable across k on hypercube and expander."""
    specs = [FamilySpec("hypercube", d=10), FamilySpec("random_regular", n=1024, degree=4, seed=1)]
    spreads, rows = {}, []
    for spec in specs:
        g = build_family(spec)
        ratios = []
        for k in ks:
            est = estimate_cover_time(g, k, StationaryProduct(), True, trials,
                                      master_seed=derive_seed(seed, "c7", spec.label, k), threads=threads)
            ratios.append(est.mean * k / (g.n * math.log(g.n)))
            rows.append((spec.label, k, est.mean, ratios[-1]))
        spreads[spec.label] = max(ratios) / min(ratios)
    passed = all(s <= 2.5 for s in spreads.values())
    return CriterionResult(7, "hypercube/expander stationary law", passed,
                           "spreads " + ", ".join(f"{k}: {v:.2f}" for k, v in spreads.items()) + " (<=2.5)",
                           details={"rows": rows, "spreads": spreads})


# -- 8 ---------------------------------------------------------------------------------

@_timed
def criterion_8(height: int = 10, small=(2, 4, 8), large=(256, 1024, 4096), trials: int = 200,
                seed: int = SEED, threads: int = 1) -> CriterionResult:
    """Binary-tree single-source cover time slope changes from about -1 to about -1/2 in k."""
    g = binary_tree_graph(height)
    reps = _tree_level_representatives(height)
    means = {}
    for k in tuple(small) + tuple(large):
        worst = None
        for v in reps:
            est = estimate_cover_time(g, k, AllAtVertex(v), True, trials,
                                      master_seed=derive_seed(seed, "c8", height, k, v), threads=threads)
            if worst is None or est.mean > worst[1].mean:
                worst = (v, est)
        means[k] = worst[1].mean
    s_small = fit_loglog_slope([(k, means[k]) for k in small]).slope
    s_large = fit_loglog_slope([(k, means[k]) for k in large]).slope
    passed = s_small <= -0.8 and s_large >= -0.7
    return CriterionResult(8, "binary-tree regime crossover", passed,
                           f"slope small-k {s_small:.3f} (<=-0.8), large-k {s_large:.3f} (>=-0.7)",
                           details={"means": means, "slope_small": s_small, "slope_large": s_large})


# -- 9 ---------------------------------------------------------------------------------

@_timed
def criterion_9(trials: int = 100_000, T: int = 50, seed: int = SEED) -> CriterionResult:
    """The contracted reset-graph walk and the geometric-reset walk have the same law at time T."""
    graphs = {"K2": path_graph(2), "cycle{n=16}": cycle_graph(16), "binary_tree{height=4}": binary_tree_graph(4)}
    rows, failures = [], []
    for name, g in graphs.items():
        for x in (0.1, 0.5):
            res = reset_walk_equivalence(g, x, T, trials, derive_seed(seed, "c9", name, x))
            rows.append((name, x, res.statistic, res.p_value))
            if not res.p_value > 0.01:
                failures.append(rows[-1])
    min_p = min(r[3] for r in rows)
    return CriterionResult(9, "reset-graph coupling", not failures,
                           f"{len(rows)} tests, min p = {min_p:.3f} (>0.01)",
                           details={"rows": rows, "failures": failures})


# -- 10 --------------------------------------------------------------------------------

@_timed
def criterion_10(side: int = 64, trials: int = 20_000, seed: int = SEED) -> CriterionResult:
    """Max-displacement tail frequency on the 2-d torus sits below 4 exp(-D^2 / (8t))."""
    g = torus_graph(2, side)
    rows, failures = [], []
    for D, t in ((8, 16), (12, 32), (16, 64)):
        tail = displacement_tail(g, 0, D, t, trials, derive_seed(seed, "c10", D, t))
        rhs = 4 * math.exp(-(D**2) / (8 * t))
        rows.append((D, t, tail.frequency, rhs))
        if tail.frequency > rhs + 3 * tail.std_error:
            failures.append(rows[-1])
    return CriterionResult(10, "torus displacement bound", not failures,
                           "; ".join(f"D={D},t={t}: {f:.4f} <= {r:.3f}" for D, t, f, r in rows),
                           details={"rows": rows})


# -- 11 --------------------------------------------------------------------------------

@_timed
def criterion_11(n: int = 128, k: int = 8, trials: int = 400, seed: int = SEED, threads: int = 1) -> CriterionResult:
    """On the barbell, single-source cover from the far side is 20 times slower than from pi."""
    spec = FamilySpec("barbell", n=n)
    g = build_family(spec)
    far = 0  # vertex 0 sits in the left clique and is not a bridge endpoint
    worst = estimate_cover_time(g, k, AllAtVertex(far), True, trials,
                                master_seed=derive_seed(seed, "c11w", n, k), threads=threads)
    stat = estimate_cover_time(g, k, StationaryProduct(), True, trials,
                               master_seed=derive_seed(seed, "c11pi", n, k), threads=threads)
    ratio = worst.mean / stat.mean
    return CriterionResult(11, "barbell stationary vs worst-case contrast", ratio >= 20.0,
                           f"single-source {worst.mean:.1f} / stationary {stat.mean:.1f} = {ratio:.1f} (>=20)",
                           details={"worst": worst.mean, "stationary": stat.mean, "ratio": ratio})


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11,
}


def iter_criteria(numbers=None, threads: int = 1):
    """Yield each criterion's result as soon as it finishes."""
    numbers = sorted(CRITERIA) if numbers is None else list(numbers)
    for num in numbers:
        fn = CRITERIA[num]
        kwargs = {"threads": threads} if "threads" in inspect.signature(fn).parameters else {}
        yield fn(**kwargs)


def run_criteria(numbers=None, threads: int = 1) -> list[CriterionResult]:
    return list(iter_criteria(numbers, threads))

