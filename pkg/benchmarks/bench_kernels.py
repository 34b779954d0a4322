"""Compare the numba and pure-numpy kernels on the same workloads.

    python benchmarks/bench_kernels.py            # both backends, side by side
    python benchmarks/bench_kernels.py --worker   # one backend (used internally)

Each backend runs in its own interpreter because the switch
(MULTIWALK_DISABLE_NUMBA) is read at import time. The script also checks
that both backends produce the same numbers.
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def _workloads():
    from multiwalk import StationaryProduct, build_family, estimate_cover_time, transition_matrix
    from multiwalk.chain import conductance
    from multiwalk.graphs import FamilySpec

    cyc = build_family(FamilySpec("cycle", n=256))
    torus = build_family(FamilySpec("torus", d=2, side=16))
    small = build_family(FamilySpec("hypercube", d=4))

    def cover(g, k, trials):
        return lambda: estimate_cover_time(g, k, StationaryProduct(), True, trials, None, 7).mean

    return {
        "cover cycle{n=256} k=1": cover(cyc, 1, 20),
        "cover cycle{n=256} k=16": cover(cyc, 16, 50),
        "cover torus{16x16} k=8": cover(torus, 8, 50),
        "conductance hypercube{d=4}": lambda: conductance(transition_matrix(small)),
    }


def worker(repeats: int) -> None:
    from multiwalk import backend_name

    out = {"backend": backend_name(), "results": {}}
    for name, fn in _workloads().items():
        value = fn()  # warm-up, includes JIT compilation
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        out["results"][name] = {"value": float(value), "seconds": best}
    print(json.dumps(out))


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--worker", action="store_true")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    if args.worker:
        worker(args.repeats)
        return 0

    runs = {}
    for flag in ("0", "1"):
        env = dict(os.environ, MULTIWALK_DISABLE_NUMBA=flag)
        proc = subprocess.run([sys.executable, __file__, "--worker", "--repeats", str(args.repeats)],
                              env=env, capture_output=True, text=True, check=True)
        res = json.loads(proc.stdout.strip().splitlines()[-1])
        runs[res["backend"]] = res["results"]

    fast, slow = runs.get("numba"), runs["numpy"]
    print(f"{'workload':34s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}  same")
    mismatch = 0
    for name, ref in slow.items():
        if fast is None:
            print(f"{name:34s} {'-':>10s} {ref['seconds']:10.4f}")
            continue
        a = fast[name]
        same = a["value"] == ref["value"]
        mismatch += not same
        print(f"{name:34s} {a['seconds']:10.4f} {ref['seconds']:10.4f} "
              f"{ref['seconds'] / a['seconds']:8.1f}x  {'yes' if same else 'NO'}")
    return 1 if mismatch else 0


if __name__ == "__main__":
    sys.exit(main())
