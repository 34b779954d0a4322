"""Monte-Carlo estimation for ``k`` independent random walks.

Every trial draws from its own generator, seeded by ``(master_seed,
trial_index)``, so estimates do not depend on the number of worker
threads or on the order in which trials finish.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from . import kernels
from .graphs import ResetGraph, WeightedGraph, build_reset_graph, stationary_distribution, vertex_boundary

DEFAULT_TRIALS = 400
UNRELIABLE_FRACTION = 0.01


class WalkError(ValueError):
    pass


# -- start specifications -------------------------------------------------------

def _check_vertices(g: WeightedGraph, vertices) -> None:
    bad = [v for v in vertices if not 0 <= int(v) < g.n]
    if bad:
        raise WalkError(f"start vertices {bad} outside 0..{g.n - 1}")


@dataclass(frozen=True)
class AllAtVertex:
    vertex: int

    def sample(self, g: WeightedGraph, k: int, rng: np.random.Generator) -> np.ndarray:
        _check_vertices(g, [self.vertex])
        return np.full(k, self.vertex, dtype=np.int64)

    @property
    def label(self) -> str:
        return f"vertex:{self.vertex}"


@dataclass(frozen=True)
class StationaryProduct:
    def sample(self, g: WeightedGraph, k: int, rng: np.random.Generator) -> np.ndarray:
        cdf = np.cumsum(stationary_distribution(g))
        cdf[-1] = 1.0
        return np.searchsorted(cdf, rng.random(k), side="right").astype(np.int64)

    @property
    def label(self) -> str:
        return "stationary"


@dataclass(frozen=True)
class ExplicitTuple:
    vertices: tuple[int, ...]

    def sample(self, g: WeightedGraph, k: int, rng: np.random.Generator) -> np.ndarray:
        if len(self.vertices) != k:
            raise WalkError(f"explicit start has {len(self.vertices)} entries for k={k}")
        _check_vertices(g, self.vertices)
        return np.array(self.vertices, dtype=np.int64)

    @property
    def label(self) -> str:
        return "tuple:" + "-".join(map(str, self.vertices))


@dataclass(frozen=True)
class DistributionOnSet:
    """Start distribution ``mu`` on a set's vertex boundary.

    ``weights`` maps vertices to masses; when omitted ``mu`` is uniform on
    the boundary of ``members`` (or on ``members`` when the boundary is
    empty, which is flagged by ``fallback``).
    """

    members: tuple[int, ...]
    weights: tuple[tuple[int, float], ...] | None = None

    @classmethod
    def point(cls, members, vertex: int) -> "DistributionOnSet":
        return cls(tuple(int(v) for v in members), ((int(vertex), 1.0),))

    @classmethod
    def uniform_on(cls, members, support) -> "DistributionOnSet":
        support = [int(v) for v in support]
        return cls(tuple(int(v) for v in members), tuple((v, 1.0 / len(support)) for v in support))

    def resolve(self, g: WeightedGraph) -> tuple[np.ndarray, np.ndarray, bool]:
        members = np.array(sorted(self.members), dtype=np.int64)
        if self.weights is not None:
            support = np.array([v for v, _ in self.weights], dtype=np.int64)
            mass = np.array([w for _, w in self.weights], dtype=float)
            if not math.isclose(mass.sum(), 1.0, abs_tol=1e-9):
                raise WalkError(f"start masses sum to {mass.sum()}, not 1")
            if not np.isin(support, members).all():
                raise WalkError("start distribution must live on the set")
            return support, mass, False
        boundary = vertex_boundary(g, members)
        fallback = boundary.size == 0
        support = members if fallback else boundary
        return support, np.full(support.size, 1.0 / support.size), fallback

    def sample(self, g: WeightedGraph, k: int, rng: np.random.Generator) -> np.ndarray:
        support, mass, _ = self.resolve(g)
        cdf = np.cumsum(mass)
        cdf[-1] = 1.0
        return support[np.searchsorted(cdf, rng.random(k), side="right")]

    @property
    def label(self) -> str:
        return f"set-boundary:{len(self.members)}"


StartSpec = AllAtVertex | StationaryProduct | ExplicitTuple | DistributionOnSet


# -- estimates ------------------------------------------------------------------

@dataclass(frozen=True)
class EstimateWithCI:
    mean: float
    std_error: float
    trials: int
    seed: int
    truncated: int = 0

    @classmethod
    def from_samples(cls, samples: np.ndarray, seed: int, truncated: int = 0) -> "EstimateWithCI":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        sd = float(samples.std(ddof=1)) if n > 1 else 0.0
        return cls(float(samples.mean()), sd / math.sqrt(n), int(n), int(seed), int(truncated))

    @property
    def unreliable(self) -> bool:
        return self.truncated > UNRELIABLE_FRACTION * self.trials

    def ci(self, z: float = 1.96) -> tuple[float, float]:
        return self.mean - z * self.std_error, self.mean + z * self.std_error

    def to_dict(self) -> dict:
        d = asdict(self)
        d["unreliable"] = self.unreliable
        return d


def combined_se(*ests: EstimateWithCI) -> float:
    return math.sqrt(sum(e.std_error**2 for e in ests))


# -- the simulation engine ------------------------------------------------------

def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=(int(trial),)))


class WalkEngine:
    """Per-graph arrays the kernels need, prepared once."""

    def __init__(self, g: WeightedGraph):
        self.g = g
        self.indptr = np.ascontiguousarray(g.indptr)
        self.indices = np.ascontiguousarray(g.indices)
        self.unit = g.is_unit_weight
        self.keys = (
            np.zeros(1) if self.unit else kernels.neighbor_keys(g.indptr, g.weights)
        )

    def run(self, pos: np.ndarray, target: np.ndarray, stop_at: int, lazy: bool,
            horizon: int, rng: np.random.Generator) -> tuple[int, bool]:
        """Advance walks until at most ``stop_at`` target vertices remain unvisited.

        Returns ``(t, finished)``; ``finished`` is False at the horizon.
        """
        covered = np.zeros(self.g.n, dtype=np.bool_)
        covered[pos] = True
        remaining = int(np.count_nonzero(target & ~covered))
        if remaining <= stop_at:
            return 0, True
        k = pos.size
        t = 0
        block = 256
        cap = max(256, (1 << 20) // k)
        while True:
            steps = min(block, horizon - t)
            u = rng.random(steps * k)
            t, remaining = kernels.advance(pos, covered, remaining, stop_at, target,
                                           self.indptr, self.indices, self.keys,
                                           self.unit, lazy, u, t, horizon)
            if remaining <= stop_at:
                return int(t), True
            if t >= horizon:
                return int(t), False
            block = min(2 * block, cap)

    def paths(self, starts: np.ndarray, steps: int, lazy: bool, rng: np.random.Generator) -> np.ndarray:
        starts = np.asarray(starts, dtype=np.int64)
        u = rng.random((starts.size, steps))
        out = np.empty((starts.size, steps + 1), dtype=np.int64)
        return kernels.sample_paths_kernel(starts, self.indptr, self.indices, self.keys,
                                           self.unit, lazy, u, out)


def default_horizon(n: int, k: int) -> int:
    return max(64, (64 * n**3) // max(k, 1))


def _target_mask(n: int, S=None) -> np.ndarray:
    mask = np.zeros(n, dtype=np.bool_)
    if S is None:
        mask[:] = True
    else:
        mask[np.asarray(S, dtype=np.int64)] = True
    if not mask.any():
        raise WalkError("target set must be nonempty")
    return mask


def sample_cover_time(g: WeightedGraph, k: int, start, lazy: bool = True,
                      horizon: int | None = None, rng: np.random.Generator | None = None,
                      *, engine: WalkEngine | None = None) -> tuple[int, bool]:
    """One draw of the ``k``-walk cover time.

    Returns ``(tau, finished)``; on truncation ``tau`` is the horizon.
    """
    if k < 1:
        raise WalkError("k must be >= 1")
    horizon = default_horizon(g.n, k) if horizon is None else int(horizon)
    if horizon < 1:
        raise WalkError("horizon must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    engine = engine or WalkEngine(g)
    pos = start.sample(g, k, rng)
    return engine.run(pos, _target_mask(g.n), 0, lazy, horizon, rng)


def _estimate(g, k, start, lazy, trials, horizon, master_seed, target, stop_at, threads):
    if trials < 2:
        raise WalkError("trials must be >= 2")
    if k < 1:
        raise WalkError("k must be >= 1")
    horizon = default_horizon(g.n, k) if horizon is None else int(horizon)
    engine = WalkEngine(g)

    def one(i):
        rng = trial_rng(master_seed, i)
        pos = start.sample(g, k, rng)
        return engine.run(pos, target, stop_at, lazy, horizon, rng)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(one, range(trials)))
    else:
        results = [one(i) for i in range(trials)]
    samples = np.array([t for t, _ in results], dtype=float)
    truncated = sum(1 for _, ok in results if not ok)
    return EstimateWithCI.from_samples(samples, master_seed, truncated)


def estimate_cover_time(g: WeightedGraph, k: int, start, lazy: bool = True,
                        trials: int = DEFAULT_TRIALS, horizon: int | None = None,
                        master_seed: int = 0, threads: int = 1) -> EstimateWithCI:
    """Mean ``k``-walk cover time over independent trials."""
    return _estimate(g, k, start, lazy, trials, horizon, master_seed, _target_mask(g.n), 0, threads)


def estimate_set_hitting(g: WeightedGraph, k: int, start, S, lazy: bool = True,
                         trials: int = DEFAULT_TRIALS, horizon: int | None = None,
                         master_seed: int = 0, threads: int = 1) -> EstimateWithCI:
    """Mean first time any of the ``k`` walks is in ``S``."""
    target = _target_mask(g.n, S)
    size = int(target.sum())
    return _estimate(g, k, start, lazy, trials, horizon, master_seed, target, size - 1, threads)


def estimate_set_cover(g: WeightedGraph, k: int, S, mu: DistributionOnSet | None = None,
                       lazy: bool = True, trials: int = DEFAULT_TRIALS, horizon: int | None = None,
                       master_seed: int = 0, threads: int = 1) -> EstimateWithCI:
    """Mean time for ``k`` walks started i.i.d. from ``mu`` to visit every vertex of ``S``.

    ``mu`` defaults to uniform on the vertex boundary of ``S``. Walks may
    leave ``S``; only visits count.
    """
    mu = mu or DistributionOnSet(tuple(int(v) for v in S))
    return _estimate(g, k, mu, lazy, trials, horizon, master_seed, _target_mask(g.n, S), 0, threads)


def worst_single_source(g: WeightedGraph, k: int, representatives: Sequence[int] | None = None,
                        lazy: bool = True, trials: int = DEFAULT_TRIALS, horizon: int | None = None,
                        master_seed: int = 0, threads: int = 1) -> tuple[int, EstimateWithCI]:
    """Largest estimated cover time over starts with every walk at one vertex.

    This is the single-source worst case, a lower estimate of the
    worst case over all start tuples.
    """
    reps = range(g.n) if representatives is None else representatives
    best = None
    for v in reps:
        est = estimate_cover_time(g, k, AllAtVertex(int(v)), lazy, trials, horizon, master_seed, threads)
        if best is None or est.mean > best[1].mean:
            best = (int(v), est)
    return best


# -- reset-walk equivalence ------------------------------------------------------

@dataclass(frozen=True)
class EquivalenceResult:
    statistic: float
    p_value: float
    dof: int
    trials: int


def _contracted_positions(reset: ResetGraph, start: int, T: int, trials: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Position after ``T`` steps once every visit to the reset vertex is contracted.

    Paths are extended in chunks until each has ``T + 1`` non-reset
    entries (the start counts as the first).
    """
    engine = WalkEngine(reset.graph)
    z = reset.z
    result = np.empty(trials, dtype=np.int64)
    need = np.full(trials, T + 1, dtype=np.int64)
    pos = np.full(trials, start, dtype=np.int64)
    active = np.arange(trials)
    first = True
    chunk = 2 * T + 1
    while active.size:
        paths = engine.paths(pos[active], chunk, False, rng)
        if not first:
            paths = paths[:, 1:]
        nonz = paths != z
        rank = np.cumsum(nonz, axis=1)
        done = rank[:, -1] >= need[active]
        rows = np.flatnonzero(done)
        idx = np.argmax(rank[rows] >= need[active[rows]][:, None], axis=1)
        result[active[rows]] = paths[rows, idx]
        rest = np.flatnonzero(~done)
        need[active[rest]] -= rank[rest, -1]
        pos[active[rest]] = paths[rest, -1]
        active = active[rest]
        first = False
    return result


def _geometric_reset_positions(g: WeightedGraph, x: float, start: int, T: int, trials: int,
                               rng: np.random.Generator) -> np.ndarray:
    """Walk on ``g`` with a jump to ``pi`` at the end of each Geo(x) epoch (support 1, 2, ...)."""
    engine = WalkEngine(g)
    pi_cdf = np.cumsum(stationary_distribution(g))
    pi_cdf[-1] = 1.0
    pos = np.full(trials, start, dtype=np.int64)
    clock = rng.geometric(x, size=trials)
    for _ in range(T):
        clock -= 1
        jump = clock == 0
        moving = ~jump
        if moving.any():
            pos[moving] = engine.paths(pos[moving], 1, False, rng)[:, 1]
        if jump.any():
            pos[jump] = np.searchsorted(pi_cdf, rng.random(int(jump.sum())), side="right")
            clock[jump] = rng.geometric(x, size=int(jump.sum()))
    return pos


def reset_walk_equivalence(g: WeightedGraph, x: float, T: int, trials: int, seed: int,
                           start: int = 0) -> EquivalenceResult:
    """Chi-square comparison of the reset-graph walk and the Geo(x)-reset walk at time ``T``.

    Steps through the reset vertex are contracted, so both processes live
    on ``V(g)``.
    """
    reset = build_reset_graph(g, x)
    rng_a = trial_rng(seed, 0)
    rng_b = trial_rng(seed, 1)
    a = _contracted_positions(reset, start, T, trials, rng_a)
    b = _geometric_reset_positions(g, x, start, T, trials, rng_b)
    table = np.vstack([np.bincount(a, minlength=g.n), np.bincount(b, minlength=g.n)])
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        return EquivalenceResult(0.0, 1.0, 0, trials)
    chi2, p, dof, _ = stats.chi2_contingency(table, correction=False)
    return EquivalenceResult(float(chi2), float(p), int(dof), trials)


# -- displacement tails --------------------------------------------------------------

@dataclass(frozen=True)
class TailFrequency:
    frequency: float
    std_error: float
    trials: int


def displacement_tail(g: WeightedGraph, start: int, D: int, t: int, trials: int, seed: int,
                      lazy: bool = True) -> TailFrequency:
    """Frequency of ``max_{1<=s<=t} dist(X_0, X_s) >= D`` over independent walks."""
    engine = WalkEngine(g)
    dist = g.distances_from(start)
    paths = engine.paths(np.full(trials, start), t, lazy, trial_rng(seed, 0))
    hit = (dist[paths[:, 1:]] >= D).any(axis=1)
    p = float(hit.mean())
    return TailFrequency(p, math.sqrt(p * (1 - p) / trials), trials)


def occupancy_after(g: WeightedGraph, T: int, trials: int, seed: int, lazy: bool = True) -> np.ndarray:
    """Vertex counts at time ``T`` for walks started from ``pi``."""
    rng = trial_rng(seed, 0)
    starts = StationaryProduct().sample(g, trials, rng)
    paths = WalkEngine(g).paths(starts, T, lazy, rng)
    return np.bincount(paths[:, -1], minlength=g.n)
