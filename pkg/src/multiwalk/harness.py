"""Experiment orchestration: configs, measurement, bound suites, sweeps and bundles.

A run is fully determined by its :class:`ExperimentConfig`. Each estimate
draws from a seed derived from the master seed and the estimate's own key
(graph label, quantity, walk count), so a suite re-run in isolation
reproduces its rows exactly and the thread count never matters.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import bounds as B
from .chain import (
    GuardError,
    MAX_DENSE_N,
    MAX_EXHAUSTIVE_CONDUCTANCE_N,
    MAX_EXHAUSTIVE_HIT_N,
    conductance_minimizer,
    distance_profile,
    large_hit_time,
    mixing_time,
    partial_mixing_time,
    relaxation_time,
    return_curve,
    set_conductance,
    stationary_hitting_all,
    transition_matrix,
)
from .graphs import FamilySpec, WeightedGraph, build_family, canonical_hard_sets, stationary_distribution
from .walks import (
    AllAtVertex,
    DistributionOnSet,
    EstimateWithCI,
    StationaryProduct,
    displacement_tail,
    estimate_cover_time,
    estimate_set_cover,
)

log = logging.getLogger(__name__)

SUITES = ("stationary", "characterization", "partial_mixing", "geometric")
SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


def derive_seed(master: int, *parts) -> int:
    """Stable 63-bit seed for a named sub-experiment."""
    key = zlib.crc32("|".join(map(str, parts)).encode())
    return int(np.random.SeedSequence([int(master), key]).generate_state(1, np.uint64)[0] >> np.uint64(1))


# -- configuration -----------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    """Everything a run needs.

    ``horizon`` is ``"default"`` (``64 n^3 / k``) or an integer.
    ``worst_case_starts`` is ``"all"``, ``"anchor"`` (vertex 0 only) or
    an explicit vertex list. ``slope_windows`` maps a family label to
    ``[low, high]`` for the sweep's fitted slope against ``k``.
    """

    families: list[FamilySpec]
    k_grid: list[int]
    seed: int
    k_tilde_grid: list[int] = field(default_factory=lambda: [1])
    lazy: bool = True
    trials: int = 400
    horizon: str | int = "default"
    suites: list[str] = field(default_factory=lambda: list(SUITES))
    out_dir: str = "out"
    worst_case_starts: str | list[int] = "anchor"
    exact_max_n: int = MAX_DENSE_N
    slope_windows: dict[str, list[float]] = field(default_factory=dict)
    stationary_lower_c: float = B.LOWER_C

    def __post_init__(self):
        if not self.families:
            raise ConfigError("families must be nonempty")
        if not self.k_grid or any(k < 1 for k in self.k_grid):
            raise ConfigError("k_grid must be nonempty with entries >= 1")
        if not self.k_tilde_grid or any(k < 1 for k in self.k_tilde_grid):
            raise ConfigError("k_tilde_grid must be nonempty with entries >= 1")
        if self.seed is None:
            raise ConfigError("seed is mandatory")
        if self.trials < 2:
            raise ConfigError("trials must be >= 2")
        unknown = set(self.suites) - set(SUITES)
        if unknown:
            raise ConfigError(f"unknown suites {sorted(unknown)}; expected a subset of {SUITES}")
        if not (self.horizon == "default" or (isinstance(self.horizon, int) and self.horizon >= 1)):
            raise ConfigError("horizon must be 'default' or a positive integer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["families"] = [f.to_dict() for f in self.families]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if "seed" not in data:
            raise ConfigError("seed is mandatory")
        data["families"] = [FamilySpec.from_dict(f) for f in data.get("families", [])]
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_json(Path(path).read_text())

    def horizon_for(self, n: int, k: int) -> int | None:
        return None if self.horizon == "default" else int(self.horizon)


# -- records -----------------------------------------------------------------------------

@dataclass(frozen=True)
class EstimateRecord:
    graph: str
    family: str
    n: int
    k: int
    start: str
    laziness: str
    quantity: str
    mean: float
    std_error: float
    trials: int
    truncated: int
    seed: int
    provenance: str = B.ESTIMATED

    @classmethod
    def make(cls, spec: FamilySpec, n: int, k: int, start: str, lazy: bool, quantity: str,
             est: EstimateWithCI, provenance: str = B.ESTIMATED) -> "EstimateRecord":
        return cls(spec.label, spec.family, n, k, start, "lazy" if lazy else "non-lazy", quantity,
                   est.mean, est.std_error, est.trials, est.truncated, est.seed, provenance)

    def key(self):
        return (self.graph, self.quantity, self.k, self.start)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mean"] = float(B.fmt(self.mean))
        d["std_error"] = float(B.fmt(self.std_error))
        return d


ESTIMATE_COLUMNS = ("graph", "family", "n", "k", "start", "laziness", "quantity", "mean",
                    "std_error", "trials", "truncated", "seed", "provenance")


def estimates_to_csv(records: Sequence[EstimateRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ESTIMATE_COLUMNS)
    for r in sorted(records, key=EstimateRecord.key):
        d = asdict(r)
        w.writerow([B.fmt(d[c]) if isinstance(d[c], float) else d[c] for c in ESTIMATE_COLUMNS])
    return buf.getvalue()


def estimates_to_json(records: Sequence[EstimateRecord]) -> str:
    return json.dumps([r.to_dict() for r in sorted(records, key=EstimateRecord.key)],
                      indent=2, sort_keys=True) + "\n"


# -- measurement -------------------------------------------------------------------------

@dataclass
class Measurement:
    spec: FamilySpec
    graph: WeightedGraph
    quantities: B.GraphQuantities
    estimates: list[EstimateRecord]
    skipped: list[str]
    context: dict
    profile_csv: str | None = None


def _worst_starts(cfg: ExperimentConfig, g: WeightedGraph) -> list[int]:
    if cfg.worst_case_starts == "all":
        return list(range(g.n))
    if cfg.worst_case_starts == "anchor":
        return [0]
    return [int(v) for v in cfg.worst_case_starts]


def _return_sums(tm, vertices, t: int) -> dict[int, list[float]]:
    return {v: list(np.cumsum(return_curve(tm, v, t))) for v in vertices}


def measure(spec: FamilySpec, cfg: ExperimentConfig, threads: int = 1,
            suites: Sequence[str] | None = None) -> Measurement:
    """Build the graph, run the exact analysis within guards, then the Monte-Carlo estimates."""
    suites = list(cfg.suites if suites is None else suites)
    g = build_family(spec)
    n = g.n
    pi = stationary_distribution(g)
    degs = g.weighted_degrees
    q = B.GraphQuantities(
        family=spec.family, n=n, m=g.total_edge_weight, d_min=float(degs.min()),
        pi_max=float(pi.max()), pi_min=float(pi.min()),
        regular=bool(np.all(degs == degs[0])),
    )
    skipped: list[str] = []
    context: dict = {}
    if spec.family == "torus":
        context["dimension"] = int(spec.d)
    elif spec.family == "cycle":
        context["dimension"] = 1
    label = spec.label
    records: list[EstimateRecord] = []
    k_all = sorted(set(cfg.k_grid))
    pairs = sorted({(kt, k) for k in k_all for kt in cfg.k_tilde_grid if kt < k}
                   | {(4 * kt, k) for k in k_all for kt in cfg.k_tilde_grid if 4 * kt < k})
    needs_exact = bool({"characterization", "partial_mixing", "geometric", "stationary"} & set(suites))
    profile_csv = None

    tm = None
    if needs_exact:
        if n > cfg.exact_max_n:
            skipped.append(f"{label}: exact analysis skipped, n={n} exceeds guard {cfg.exact_max_n}")
        else:
            try:
                tm = transition_matrix(g, lazy=cfg.lazy)
            except GuardError as exc:
                skipped.append(f"{label}: {exc}")
    if tm is not None:
        tmix = mixing_time(tm, 0.25)
        if tmix is not None:
            q.t_mix = B.Quantity(float(tmix))
            profile_csv = distance_profile(tm, min(max(2 * tmix, 8), 4096)).to_csv()
        try:
            spec_sum = relaxation_time(tm)
            q.t_rel = B.Quantity(spec_sum.t_rel)
        except Exception as exc:  # convergence failure is reported, not fatal
            skipped.append(f"{label}: relaxation time unavailable ({exc})")
        q.max_hit = B.Quantity(float(stationary_hitting_all(tm).max()))
        for kt, k in pairs:
            pm = partial_mixing_time(tm, kt, k)
            if pm is not None:
                q.partial_mix[(kt, k)] = B.Quantity(float(pm))
            tv = mixing_time(tm, 1.0 - kt / k)
            if tv is not None:
                q.tv_mix[(kt, k)] = B.Quantity(float(tv))
        catalog = [] if spec.is_random else canonical_hard_sets(g, spec)
        if n <= MAX_EXHAUSTIVE_CONDUCTANCE_N:
            q.phi = B.Quantity(conductance_minimizer(tm)[0])
        else:
            small = [hs.vertices for hs in catalog if hs.mass <= 0.5 + 1e-12]
            if small:
                q.phi = B.Quantity(min(set_conductance(tm, S) for S in small), B.CATALOG)
        for kt, k in pairs:
            if n <= MAX_EXHAUSTIVE_HIT_N:
                lh = large_hit_time(tm, kt, k, "exhaustive")
            elif catalog:
                lh = large_hit_time(tm, kt, k, "catalog", graph=g, spec=spec)
            else:
                continue
            if lh.time is not None:
                prov = B.EXACT if lh.provenance == "exact" else B.CATALOG
                q.large_hit[(kt, k)] = B.Quantity(float(lh.time), prov)
        if "stationary" in suites and q.t_rel is not None and q.t_mix is not None:
            reps = sorted({0, int(np.argmax(pi)), int(np.argmin(pi))})
            horizon = int(min(max(math.ceil(q.t_rel.value), n * math.log(n) ** 2), 20000))
            sums = _return_sums(tm, reps, horizon)
            q.gates["constant_return"] = B.constant_return_gate(
                n, q.pi_min, q.t_mix.value, q.t_rel.value, sums, {v: float(pi[v]) for v in reps})
            q.gates["harmonic_return"] = B.harmonic_return_gate(n, q.t_mix.value, sums)

    def horizon(k):
        return cfg.horizon_for(n, k)

    cover_ks = sorted(set(k_all) | {kt for kt, _ in pairs})
    for k in cover_ks:
        seed = derive_seed(cfg.seed, label, "cover_pi", k)
        est = estimate_cover_time(g, k, StationaryProduct(), cfg.lazy, cfg.trials, horizon(k), seed, threads)
        q.cover_pi[k] = B.Quantity.of_estimate(est)
        records.append(EstimateRecord.make(spec, n, k, "stationary", cfg.lazy, "cover_stationary", est))
    if "characterization" in suites:
        for k in k_all:
            best = None
            for v in _worst_starts(cfg, g):
                seed = derive_seed(cfg.seed, label, "cover_worst", k, v)
                est = estimate_cover_time(g, k, AllAtVertex(v), cfg.lazy, cfg.trials, horizon(k), seed, threads)
                if best is None or est.mean > best[1].mean:
                    best = (v, est)
            q.cover_worst[k] = B.Quantity.of_estimate(best[1], B.SINGLE_SOURCE)
            records.append(EstimateRecord.make(spec, n, k, f"vertex:{best[0]}", cfg.lazy,
                                               "cover_single_source_worst", best[1], B.SINGLE_SOURCE))
        if not spec.is_random:
            catalog = canonical_hard_sets(g, spec)
            if catalog:
                hs = catalog[0]
                for kt in sorted({kt for kt, _ in pairs}):
                    seed = derive_seed(cfg.seed, label, "large_cover", kt, hs.name)
                    est = estimate_set_cover(g, kt, hs.vertices, DistributionOnSet(tuple(int(v) for v in hs.vertices)),
                                             cfg.lazy, cfg.trials, horizon(kt), seed, threads)
                    q.large_cover[kt] = B.Quantity.of_estimate(est, B.CATALOG)
                    records.append(EstimateRecord.make(spec, n, kt, f"boundary:{hs.name}", cfg.lazy,
                                                       "large_cover_catalog", est, B.CATALOG))
    if "geometric" in suites and spec.family in ("torus", "cycle"):
        d = context["dimension"]
        side = n if d == 1 else int(spec.side)
        rows = []
        for D, t in ((side // 8, side // 4), (side // 4, side // 2)):
            if D < 1 or t < 1:
                continue
            seed = derive_seed(cfg.seed, label, "displacement", D, t)
            tail = displacement_tail(g, 0, D, t, cfg.trials * 10, seed, cfg.lazy)
            rows.append((D, t, tail.frequency, tail.std_error))
        context["displacement"] = rows
    return Measurement(spec, g, q, records, skipped, context, profile_csv)


def run_suites(meas: Measurement, cfg: ExperimentConfig, suites: Sequence[str] | None = None) -> list[B.BoundReport]:
    suites = list(cfg.suites if suites is None else suites)
    q = meas.quantities
    out: list[B.BoundReport] = []
    ks = sorted(set(cfg.k_grid))
    for k in ks:
        if "stationary" in suites:
            out.extend(B.eval_stationary_upper(q, k))
            out.append(B.eval_stationary_lower(q, k, cfg.stationary_lower_c))
        if "characterization" in suites:
            out.append(B.eval_char_upper(q, k))
            for variant in ("hit", "regular", "cycle"):
                out.append(B.eval_char_lower(q, k, variant))
        for kt in sorted(set(cfg.k_tilde_grid)):
            if kt >= k:
                continue
            if "partial_mixing" in suites:
                out.extend(B.eval_partial_mixing_bounds(q, kt, k))
            if "geometric" in suites:
                ctx = meas.context if kt == min(cfg.k_tilde_grid) else {
                    k_: v for k_, v in meas.context.items() if k_ != "displacement"}
                out.extend(B.eval_geometric_bounds(q, kt, k, ctx))
    return out


# -- bundles -----------------------------------------------------------------------------

@dataclass
class Bundle:
    estimates: list[EstimateRecord]
    reports: list[B.BoundReport]
    skipped: list[str]
    seed: int

    @property
    def failures(self) -> list[B.BoundReport]:
        return [r for r in self.reports if r.failed]

    @property
    def exit_code(self) -> int:
        return 1 if self.failures else 0

    def bounds_csv(self) -> str:
        return B.reports_to_csv(self.reports)

    def bounds_json(self) -> str:
        rows = []
        for r in self.reports:
            d = r.to_dict()
            d["seed"] = self.seed
            rows.append(d)
        return json.dumps(rows, indent=2, sort_keys=True, default=float) + "\n"

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "estimates.json").write_text(estimates_to_json(self.estimates))
        (out / "estimates.csv").write_text(estimates_to_csv(self.estimates))
        (out / "bounds.csv").write_text(self.bounds_csv())
        (out / "bounds.json").write_text(self.bounds_json())
        summary = {
            "schema": SCHEMA_VERSION,
            "seed": self.seed,
            "reports": len(self.reports),
            "failures": [r.bound_id + "@" + r.family + f"/n={r.n}/k={r.k}" for r in self.failures],
            "advisory_failures": sum(1 for r in self.reports if r.status == "fail" and r.advisory),
            "skipped": self.skipped + [f"{r.bound_id}@{r.family}/k={r.k}: {r.note}"
                                       for r in self.reports if r.status == "skipped"],
        }
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        return out


def _report_key(r: B.BoundReport):
    return (r.family, r.n, r.k, -1 if r.k_tilde is None else r.k_tilde, r.bound_id)


def run_experiment(cfg: ExperimentConfig, threads: int = 1, out_dir=None,
                   suites: Sequence[str] | None = None) -> Bundle:
    """Measure every family, evaluate the requested suites and optionally write the bundle."""
    estimates, reports, skipped = [], [], []
    for spec in cfg.families:
        meas = measure(spec, cfg, threads, suites)
        estimates.extend(meas.estimates)
        reports.extend(run_suites(meas, cfg, suites))
        skipped.extend(meas.skipped)
        if out_dir is not None and meas.profile_csv is not None:
            prof_dir = Path(out_dir) / "profiles"
            prof_dir.mkdir(parents=True, exist_ok=True)
            (prof_dir / f"{_safe(spec.label)}.csv").write_text(meas.profile_csv)
    reports.sort(key=_report_key)
    estimates.sort(key=EstimateRecord.key)
    bundle = Bundle(estimates, reports, skipped, cfg.seed)
    if out_dir is not None:
        bundle.write(out_dir)
    return bundle


def _safe(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-_=," else "_" for c in label)


def merge_bundles(dirs: Sequence, out_dir) -> Path:
    """Concatenate estimates and bound rows from several bundles, sorted by key."""
    est_rows, bound_rows = [], []
    for d in dirs:
        d = Path(d)
        est_rows.extend(json.loads((d / "estimates.json").read_text()))
        bound_rows.extend(json.loads((d / "bounds.json").read_text()))
    est_rows.sort(key=lambda r: (r["graph"], r["quantity"], r["k"], r["start"], r["seed"]))
    bound_rows.sort(key=lambda r: (r["family"], r["n"], r["k"],
                                   -1 if r["k_tilde"] is None else r["k_tilde"], r["bound_id"], r["seed"]))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "estimates.json").write_text(json.dumps(est_rows, indent=2, sort_keys=True) + "\n")
    (out / "bounds.json").write_text(json.dumps(bound_rows, indent=2, sort_keys=True) + "\n")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(B.CSV_COLUMNS)
    for r in bound_rows:
        w.writerow([r["bound_id"], r["family"], r["n"], r["k"], B.fmt(r["k_tilde"]), B.fmt(r["rhs"]),
                    B.fmt(r["lhs"]), B.fmt(r["constant"]), r["pass"]])
    (out / "bounds.csv").write_text(buf.getvalue())
    failures = [r for r in bound_rows if r["pass"] == "fail"]
    (out / "summary.json").write_text(json.dumps(
        {"schema": SCHEMA_VERSION, "sources": [str(d) for d in dirs], "reports": len(bound_rows),
         "failures": len(failures)}, indent=2, sort_keys=True) + "\n")
    return out


# -- slopes and sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual: float
    points: int


def fit_loglog_slope(points: Sequence[tuple[float, float]]) -> SlopeFit:
    """Least squares of ``ln y`` on ``ln x``; ``residual`` is the RMS of the log residuals."""
    if len(points) < 3:
        raise ValueError("need at least 3 points")
    x = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("points must be positive")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) < 1e-12:
        raise ValueError("degenerate x range")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return SlopeFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))), len(points))


def gnuplot_data(points: Sequence[tuple[float, float]], header: str = "") -> str:
    lines = [f"# {header}"] if header else []
    lines += [f"{B.fmt(float(x))} {B.fmt(float(y))}" for x, y in points]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SweepRow:
    graph: str
    quantity: str
    fit: SlopeFit
    window: tuple[float, float] | None

    @property
    def status(self) -> str:
        if self.window is None:
            return "unchecked"
        lo, hi = self.window
        return "pass" if lo <= self.fit.slope <= hi else "fail"


def run_sweep(cfg: ExperimentConfig, threads: int = 1, out_dir=None) -> tuple[list[SweepRow], list[EstimateRecord]]:
    """Stationary and single-source cover estimates across ``k_grid``, with log-log fits against ``k``."""
    rows, records = [], []
    ks = sorted(set(cfg.k_grid))
    for spec in cfg.families:
        g = build_family(spec)
        label = spec.label
        for quantity, start in (("cover_stationary", StationaryProduct()), ("cover_single_source", AllAtVertex(0))):
            pts = []
            for k in ks:
                seed = derive_seed(cfg.seed, label, quantity, k)
                est = estimate_cover_time(g, k, start, cfg.lazy, cfg.trials, cfg.horizon_for(g.n, k), seed, threads)
                records.append(EstimateRecord.make(spec, g.n, k, start.label, cfg.lazy, quantity, est))
                pts.append((k, est.mean))
            if out_dir is not None:
                out = Path(out_dir)
                out.mkdir(parents=True, exist_ok=True)
                (out / f"{_safe(label)}_{quantity}.dat").write_text(gnuplot_data(pts, f"k {quantity} {label}"))
            if len(pts) >= 3:
                win = cfg.slope_windows.get(label) if quantity == "cover_stationary" else None
                rows.append(SweepRow(label, quantity, fit_loglog_slope(pts), tuple(win) if win else None))
    if out_dir is not None:
        out = Path(out_dir)
        (out / "estimates.json").write_text(estimates_to_json(records))
        (out / "sweep.json").write_text(json.dumps(
            [{"graph": r.graph, "quantity": r.quantity, **asdict(r.fit),
              "window": list(r.window) if r.window else None, "status": r.status} for r in rows],
            indent=2, sort_keys=True, default=float) + "\n")
    return rows, records
