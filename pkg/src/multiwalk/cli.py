"""Command-line entry point: ``multiwalk <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from pathlib import Path

from . import bounds as B
from .chain import (
    GuardError,
    MAX_EXHAUSTIVE_CONDUCTANCE_N,
    MAX_EXHAUSTIVE_HIT_N,
    conductance,
    distance_profile,
    large_hit_time,
    mixing_time,
    partial_mixing_time,
    relaxation_time,
    separation_time,
    stationary_hitting_all,
    transition_matrix,
)
from .graphs import FamilySpec, GraphError, build_family, read_edge_list, write_edge_list
from .harness import (
    ConfigError,
    EstimateRecord,
    ExperimentConfig,
    estimates_to_json,
    merge_bundles,
    run_experiment,
    run_sweep,
)
from .walks import AllAtVertex, StationaryProduct, estimate_cover_time, estimate_set_hitting

log = logging.getLogger("multiwalk")

_LABEL = re.compile(r"^(?P<family>[a-z_]+)(\{(?P<params>[^}]*)\})?$")


def parse_family(text: str) -> FamilySpec:
    """Parse ``cycle{n=64}`` or ``torus{d=2,side=16}`` into a FamilySpec."""
    m = _LABEL.match(text.strip())
    if not m:
        raise argparse.ArgumentTypeError(f"cannot parse family {text!r}")
    params = {}
    if m.group("params"):
        for part in m.group("params").split(","):
            key, _, val = part.partition("=")
            if not val:
                raise argparse.ArgumentTypeError(f"bad parameter {part!r} in {text!r}")
            params[key.strip()] = int(val)
    try:
        return FamilySpec(m.group("family"), **params)
    except (GraphError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def parse_start(text: str):
    if text == "stationary":
        return StationaryProduct()
    if text.startswith("vertex:"):
        return AllAtVertex(int(text.split(":", 1)[1]))
    raise argparse.ArgumentTypeError("start must be 'stationary' or 'vertex:<id>'")


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _load_graph(args):
    if getattr(args, "edges", None):
        return None, read_edge_list(Path(args.edges).read_text())
    if not args.family:
        raise SystemExit("error: give --family or --edges")
    return args.family, build_family(args.family)


def _emit(text: str, out: str | None, name: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    if path.suffix == "":
        path.mkdir(parents=True, exist_ok=True)
        path = path / name
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def _rounded(obj):
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, float):
        return float(B.fmt(obj))
    return obj


# -- subcommands ---------------------------------------------------------------------

def cmd_generate(args) -> int:
    specs = [args.family] if args.family else ExperimentConfig.load(args.config).families
    for spec in specs:
        _emit(write_edge_list(build_family(spec)), args.out, f"{spec.label}.edges")
    return 0


def cmd_analyze(args) -> int:
    spec, g = _load_graph(args)
    try:
        tm = transition_matrix(g, lazy=not args.non_lazy)
    except GuardError as exc:
        print(f"skipped: {exc}", file=sys.stderr)
        return 0
    out = {"graph": spec.label if spec else args.edges, "n": g.n, "m": g.m,
           "laziness": "non-lazy" if args.non_lazy else "lazy"}
    out["t_mix"] = mixing_time(tm, 0.25)
    out["t_sep"] = separation_time(tm)
    try:
        sp = relaxation_time(tm)
        out["lambda2"], out["t_rel"], out["eigen_residual"], out["eigen_method"] = (
            sp.lambda2, sp.t_rel, sp.residual, sp.method)
    except Exception as exc:
        out["relaxation_error"] = str(exc)
    out["max_stationary_hitting"] = float(stationary_hitting_all(tm).max())
    if g.n <= MAX_EXHAUSTIVE_CONDUCTANCE_N and g.n >= 2:
        out["conductance"] = conductance(tm)
    pairs = [(kt, k) for k in args.k for kt in args.k_tilde if kt < k]
    out["partial_mixing"] = {f"{kt}/{k}": partial_mixing_time(tm, kt, k) for kt, k in pairs}
    lh = {}
    for kt, k in pairs:
        if g.n <= MAX_EXHAUSTIVE_HIT_N:
            res = large_hit_time(tm, kt, k, "exhaustive")
        elif spec is not None and not spec.is_random:
            res = large_hit_time(tm, kt, k, "catalog", graph=g, spec=spec)
        else:
            continue
        lh[f"{kt}/{k}"] = {"time": res.time, "provenance": res.provenance}
    out["large_hit"] = lh
    text = json.dumps(_rounded(out), indent=2, sort_keys=True) + "\n"
    _emit(text, args.out, "analysis.json")
    if args.out and Path(args.out).suffix == "" and out["t_mix"] is not None:
        # a directory target also gets the (t, d, s) profile
        prof = distance_profile(tm, max(8, 4 * out["t_mix"]))
        _emit(prof.to_csv(), args.out, "profile.csv")
    return 0


def cmd_estimate(args) -> int:
    spec, g = _load_graph(args)
    lazy = not args.non_lazy
    records = []
    for k in args.k:
        if args.target:
            est = estimate_set_hitting(g, k, args.start, args.target, lazy, args.trials, args.horizon,
                                       args.seed, args.threads)
            quantity = "set_hitting"
        else:
            est = estimate_cover_time(g, k, args.start, lazy, args.trials, args.horizon, args.seed, args.threads)
            quantity = "cover"
        if spec is not None:
            rec = EstimateRecord.make(spec, g.n, k, args.start.label, lazy, quantity, est)
        else:
            rec = EstimateRecord(Path(args.edges).stem, "edge-list", g.n, k, args.start.label,
                                 "lazy" if lazy else "non-lazy", quantity, est.mean, est.std_error,
                                 est.trials, est.truncated, est.seed)
        records.append(rec)
        if est.unreliable:
            log.warning("k=%d: %d of %d trials truncated; estimate unreliable", k, est.truncated, est.trials)
    _emit(estimates_to_json(records), args.out, "estimates.json")
    return 0


def _config_with_overrides(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def cmd_sweep(args) -> int:
    cfg = _config_with_overrides(args)
    rows, _ = run_sweep(cfg, args.threads, args.out or cfg.out_dir)
    status = 0
    for r in rows:
        print(f"{r.graph} {r.quantity}: slope {r.fit.slope:.4f} (rms {r.fit.residual:.3g}) {r.status}")
        status |= r.status == "fail"
    return int(status)


def cmd_verify(args) -> int:
    from . import acceptance

    if args.config:
        cfg = _config_with_overrides(args)
        suites = [args.suite] if args.suite and args.suite in cfg.suites else None
        bundle = run_experiment(cfg, args.threads, args.out or cfg.out_dir, suites)
        for r in bundle.failures:
            print(f"FAIL {r.bound_id} {r.family} n={r.n} k={r.k} k_tilde={r.k_tilde} "
                  f"lhs={B.fmt(r.lhs)} rhs={B.fmt(r.rhs)} C={B.fmt(r.constant)}")
        print(f"{len(bundle.reports)} reports, {len(bundle.failures)} failures")
        return bundle.exit_code
    suite = args.suite or "acceptance"
    if suite == "acceptance":
        numbers = None
    elif suite.startswith("acceptance:"):
        numbers = _int_list(suite.split(":", 1)[1])
    else:
        raise SystemExit(f"error: unknown suite {suite!r} (use 'acceptance' or 'acceptance:1,2')")
    failed = 0
    for res in acceptance.iter_criteria(numbers, args.threads):
        print(res.line(), flush=True)
        failed += not res.passed
    return 1 if failed else 0


def cmd_report(args) -> int:
    out = merge_bundles(args.bundles, args.out or "report")
    print(out)
    return 0


# -- parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multiwalk", description="Multiple random walk cover times and mixing.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, graph=True):
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--seed", type=int, default=None, help="master seed")
        sp.add_argument("--out", help="output file or directory")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
        if graph:
            sp.add_argument("--family", type=parse_family, help="e.g. cycle{n=64}, torus{d=2,side=16}")
            sp.add_argument("--edges", help="edge-list file instead of --family")

    sp = sub.add_parser("generate", help="write a family graph as an edge list")
    common(sp)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("analyze", help="exact chain quantities")
    common(sp)
    sp.add_argument("--k", type=_int_list, default=[4])
    sp.add_argument("--k-tilde", type=_int_list, default=[1])
    sp.add_argument("--non-lazy", action="store_true")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("estimate", help="Monte-Carlo cover or hitting time")
    common(sp)
    sp.add_argument("--k", type=_int_list, default=[1])
    sp.add_argument("--start", type=parse_start, default=StationaryProduct())
    sp.add_argument("--target", type=_int_list, help="estimate hitting time of this vertex set instead")
    sp.add_argument("--trials", type=int, default=400)
    sp.add_argument("--horizon", type=int, default=None)
    sp.add_argument("--non-lazy", action="store_true")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("sweep", help="k-grid sweep with log-log slope fits")
    common(sp, graph=False)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify", help="acceptance suites or a config's bound suites")
    common(sp, graph=False)
    sp.add_argument("--suite", help="acceptance, acceptance:<n,...>, or a bound suite name with --config")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("report", help="merge bundle directories")
    sp.add_argument("bundles", nargs="+")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "estimate" and args.seed is None:
        args.seed = 0
    if args.command in ("sweep",) and not args.config:
        parser.error("sweep needs --config")
    if args.command == "generate" and not (args.family or args.config):
        parser.error("generate needs --family or --config")
    try:
        return int(args.func(args) or 0)
    except (ConfigError, GraphError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
