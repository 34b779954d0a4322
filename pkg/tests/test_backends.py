"""The numba and numpy kernels must give identical results."""
import json
import os
import subprocess
import sys

import pytest

from multiwalk._accel import backend_name

SCRIPT = r"""
import json
from multiwalk import backend_name
from multiwalk.chain import conductance, transition_matrix
from multiwalk.graphs import FamilySpec, WeightedGraph, build_family
from multiwalk.walks import AllAtVertex, StationaryProduct, estimate_cover_time, estimate_set_hitting, reset_walk_equivalence

out = {"backend": backend_name()}
torus = build_family(FamilySpec("torus", d=2, side=6))
weighted = WeightedGraph.from_edges(4, [(0, 1, 1.0), (1, 2, 2.5), (2, 3, 0.5), (3, 0, 4.0), (0, 2, 1.5)])
out["cover"] = estimate_cover_time(torus, 3, StationaryProduct(), True, 40, None, 5).mean
out["cover_nonlazy"] = estimate_cover_time(weighted, 2, AllAtVertex(0), False, 40, None, 6).mean
out["hit"] = estimate_set_hitting(torus, 2, AllAtVertex(0), [20, 21], True, 40, None, 7).mean
out["phi"] = conductance(transition_matrix(build_family(FamilySpec("hypercube", d=3))))
out["reset"] = reset_walk_equivalence(build_family(FamilySpec("cycle", n=8)), 0.2, 10, 2000, 8).statistic
print(json.dumps(out))
"""


def _run(disable: str) -> dict:
    env = dict(os.environ, MULTIWALK_DISABLE_NUMBA=disable)
    proc = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


@pytest.mark.skipif(backend_name() != "numba", reason="numba not installed")
def test_backends_agree_exactly():
    fast, slow = _run("0"), _run("1")
    assert fast.pop("backend") == "numba" and slow.pop("backend") == "numpy"
    assert fast == slow


def test_flag_selects_numpy():
    assert _run("1")["backend"] == "numpy"
