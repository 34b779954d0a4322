"""Weighted graphs, the family generators and the geometric reset graph."""
from __future__ import annotations

import io
import itertools
import logging
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Iterable, Iterator

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

log = logging.getLogger(__name__)

FAMILIES = (
    "cycle",
    "torus",
    "binary_tree",
    "hypercube",
    "clique",
    "barbell",
    "random_regular",
    "preferential_attachment",
)
RANDOM_FAMILIES = ("random_regular", "preferential_attachment")


class GraphError(ValueError):
    """Invalid graph or family parameters."""


class WeightedGraph:
    """Undirected, connected graph with positive edge weights in CSR form.

    Vertices are ``0..n-1``. Each undirected edge is stored in both
    directions; neighbour lists are sorted. Self-loops are rejected.
    """

    __slots__ = ("n", "indptr", "indices", "weights", "_unit", "_key")

    def __init__(self, n: int, indptr, indices, weights, *, check: bool = True):
        self.n = int(n)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.weights = np.asarray(weights, dtype=np.float64)
        for arr in (self.indptr, self.indices, self.weights):
            arr.setflags(write=False)
        self._unit = bool(np.all(self.weights == 1.0))
        self._key = None
        if check:
            self._validate()

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple]) -> "WeightedGraph":
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples; repeated edges add weight."""
        acc: dict[tuple[int, int], float] = {}
        for e in edges:
            u, v = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
            if not w > 0 or not math.isfinite(w):
                raise GraphError(f"edge ({u}, {v}) has non-positive weight {w}")
            key = (u, v) if u < v else (v, u)
            acc[key] = acc.get(key, 0.0) + w
        if acc:
            pairs = np.array(sorted(acc), dtype=np.int64)
            w = np.array([acc[tuple(p)] for p in pairs], dtype=np.float64)
            rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
            cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
            ww = np.concatenate([w, w])
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
            ww = np.zeros(0)
        order = np.lexsort((cols, rows))
        rows, cols, ww = rows[order], cols[order], ww[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        return cls(n, np.cumsum(indptr), cols, ww)

    @classmethod
    def from_networkx(cls, g) -> "WeightedGraph":
        nodes = sorted(g.nodes())
        index = {v: i for i, v in enumerate(nodes)}
        return cls.from_edges(
            len(nodes),
            ((index[u], index[v], d.get("weight", 1.0)) for u, v, d in g.edges(data=True)),
        )

    def _validate(self) -> None:
        n = self.n
        if n < 1:
            raise GraphError("graph needs at least one vertex")
        if self.indptr.shape != (n + 1,) or self.indptr[0] != 0:
            raise GraphError("malformed indptr")
        if np.any(self.weights <= 0):
            raise GraphError("edge weights must be strictly positive")
        src = np.repeat(np.arange(n), np.diff(self.indptr))
        if np.any(src == self.indices):
            raise GraphError("self-loops are not stored")
        mat = self.to_scipy()
        if abs(mat - mat.T).max() > 0:
            raise GraphError("edge weights are not symmetric")
        if n > 1:
            ncomp, _ = connected_components(mat, directed=False)
            if ncomp != 1:
                raise GraphError(f"graph is disconnected ({ncomp} components)")

    # -- basic quantities -------------------------------------------------
    @property
    def is_unit_weight(self) -> bool:
        return self._unit

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def weighted_degrees(self) -> np.ndarray:
        return np.add.reduceat(self.weights, self.indptr[:-1]) if self.n > 1 else np.zeros(1)

    @property
    def m(self) -> int:
        """Number of undirected edges."""
        return int(self.indices.size // 2)

    @property
    def total_edge_weight(self) -> float:
        return float(self.weights.sum() / 2.0)

    @property
    def d_min(self) -> int:
        return int(self.degrees.min())

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def weight(self, u: int, v: int) -> float:
        lo, hi = self.indptr[u], self.indptr[u + 1]
        j = lo + np.searchsorted(self.indices[lo:hi], v)
        if j < hi and self.indices[j] == v:
            return float(self.weights[j])
        return 0.0

    def edges(self) -> Iterator[tuple[int, int, float]]:
        """Undirected edges with ``u < v`` in lexicographic order."""
        for u in range(self.n):
            for j in range(self.indptr[u], self.indptr[u + 1]):
                v = int(self.indices[j])
                if u < v:
                    yield u, v, float(self.weights[j])

    def to_scipy(self) -> csr_matrix:
        return csr_matrix((self.weights, self.indices, self.indptr), shape=(self.n, self.n))

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def to_networkx(self):
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_weighted_edges_from(self.edges())
        return g

    def distances_from(self, source: int) -> np.ndarray:
        """Hop distances from ``source`` (weights ignored)."""
        d = shortest_path(self.to_scipy(), unweighted=True, indices=source, directed=False)
        return d.astype(np.int64)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self) -> int:
        if self._key is None:
            self._key = hash((self.n, self.indices.tobytes(), self.weights.tobytes()))
        return self._key

    def __repr__(self) -> str:
        return f"WeightedGraph(n={self.n}, m={self.m}, unit={self._unit})"


# -- serialization ---------------------------------------------------------

def _fmt_weight(w: float) -> str:
    return str(int(w)) if float(w).is_integer() else repr(float(w))


def write_edge_list(g: WeightedGraph, fh=None) -> str:
    """Header ``n m`` then one ``u v w`` line per edge, ``u < v``, sorted."""
    buf = io.StringIO()
    buf.write(f"{g.n} {g.m}\n")
    for u, v, w in g.edges():
        buf.write(f"{u} {v} {_fmt_weight(w)}\n")
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_edge_list(text_or_fh) -> WeightedGraph:
    text = text_or_fh if isinstance(text_or_fh, str) else text_or_fh.read()
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or len(lines[0]) != 2:
        raise GraphError("edge list must start with an 'n m' header")
    n, m = int(lines[0][0]), int(lines[0][1])
    body = lines[1:]
    if len(body) != m:
        raise GraphError(f"header announces {m} edges, found {len(body)}")
    edges = []
    for parts in body:
        if len(parts) not in (2, 3):
            raise GraphError(f"bad edge line: {' '.join(parts)}")
        edges.append((int(parts[0]), int(parts[1]), float(parts[2]) if len(parts) == 3 else 1.0))
    return WeightedGraph.from_edges(n, edges)


# -- family specs ----------------------------------------------------------

@dataclass(frozen=True)
class FamilySpec:
    """A graph family together with its size parameters.

    ``n`` sizes cycle, clique, barbell, random_regular and
    preferential_attachment; the torus uses ``d`` and ``side`` (or ``n``
    when it is a perfect ``d``-th power); binary_tree uses ``height`` and
    hypercube uses ``d``.
    """

    family: str
    n: int | None = None
    d: int | None = None
    side: int | None = None
    height: int | None = None
    degree: int | None = None
    m: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise GraphError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "torus" and self.side is None and self.n is not None and self.d:
            side = round(self.n ** (1.0 / self.d))
            match = [s for s in (side - 1, side, side + 1) if s > 0 and s**self.d == self.n]
            if not match:
                raise GraphError(f"torus n={self.n} is not a perfect {self.d}-th power")
            object.__setattr__(self, "side", match[0])

    @property
    def expected_n(self) -> int:
        f = self.family
        if f == "torus":
            return int(self.side) ** int(self.d)
        if f == "binary_tree":
            return 2 ** (int(self.height) + 1) - 1
        if f == "hypercube":
            return 2 ** int(self.d)
        return int(self.n)

    @property
    def is_random(self) -> bool:
        return self.family in RANDOM_FAMILIES

    @property
    def label(self) -> str:
        params = {k: v for k, v in asdict(self).items() if k != "family" and v is not None}
        if self.family == "torus":
            params.pop("n", None)
        inner = ",".join(f"{k}={v}" for k, v in params.items())
        return f"{self.family}{{{inner}}}"

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict) -> "FamilySpec":
        return cls(**data)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise GraphError(msg)


def _positive(spec: FamilySpec, *names: str) -> None:
    for name in names:
        val = getattr(spec, name)
        _require(val is not None and int(val) >= 1, f"{spec.family}: parameter {name} must be a positive integer, got {val!r}")


def cycle_graph(n: int) -> WeightedGraph:
    _require(n >= 3, f"cycle needs n >= 3, got {n}")
    return WeightedGraph.from_edges(n, ((i, (i + 1) % n) for i in range(n)))


def path_graph(n: int) -> WeightedGraph:
    _require(n >= 2, f"path needs n >= 2, got {n}")
    return WeightedGraph.from_edges(n, ((i, i + 1) for i in range(n - 1)))


def torus_graph(d: int, side: int) -> WeightedGraph:
    _require(d >= 1 and side >= 3, f"torus needs d >= 1 and side >= 3, got d={d}, side={side}")
    n = side**d
    coords = np.array(np.unravel_index(np.arange(n), (side,) * d)).T
    edges = []
    for axis in range(d):
        nxt = coords.copy()
        nxt[:, axis] = (nxt[:, axis] + 1) % side
        targets = np.ravel_multi_index(nxt.T, (side,) * d)
        edges.extend(zip(range(n), targets.tolist()))
    return WeightedGraph.from_edges(n, edges)


def torus_coordinates(d: int, side: int) -> np.ndarray:
    return np.array(np.unravel_index(np.arange(side**d), (side,) * d)).T


def binary_tree_graph(height: int) -> WeightedGraph:
    """Complete binary tree; vertex ``i`` has heap index ``i + 1`` (root is 0)."""
    _require(height >= 1, f"binary_tree needs height >= 1, got {height}")
    n = 2 ** (height + 1) - 1
    return WeightedGraph.from_edges(n, ((h - 1, h // 2 - 1) for h in range(2, n + 1)))


def hypercube_graph(d: int) -> WeightedGraph:
    _require(d >= 1, f"hypercube needs d >= 1, got {d}")
    n = 2**d
    return WeightedGraph.from_edges(
        n, ((v, v ^ (1 << b)) for v in range(n) for b in range(d) if v < v ^ (1 << b))
    )


def clique_graph(n: int) -> WeightedGraph:
    _require(n >= 2, f"clique needs n >= 2, got {n}")
    return WeightedGraph.from_edges(n, itertools.combinations(range(n), 2))


def barbell_graph(n: int) -> WeightedGraph:
    """Two cliques on ``n/2`` vertices joined by the edge ``(n/2 - 1, n/2)``."""
    _require(n >= 4 and n % 2 == 0, f"barbell needs an even n >= 4, got {n}")
    h = n // 2
    edges = list(itertools.combinations(range(h), 2))
    edges += [(u + h, v + h) for u, v in itertools.combinations(range(h), 2)]
    edges.append((h - 1, h))
    return WeightedGraph.from_edges(n, edges)


def random_regular_graph(n: int, degree: int, seed: int, max_tries: int = 1000) -> WeightedGraph:
    """Configuration model, resampled until the multigraph is simple and connected."""
    _require(degree >= 1 and n > degree, f"random_regular needs 1 <= degree < n, got degree={degree}, n={n}")
    _require((n * degree) % 2 == 0, f"random_regular needs n*degree even, got {n}*{degree}")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), degree)
    for _ in range(max_tries):
        perm = rng.permutation(stubs)
        u, v = perm[0::2], perm[1::2]
        if np.any(u == v):
            continue
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        keys = lo * n + hi
        if np.unique(keys).size != keys.size:
            continue
        try:
            return WeightedGraph.from_edges(n, zip(lo.tolist(), hi.tolist()))
        except GraphError:
            continue
    raise GraphError(f"random_regular: no simple connected sample within {max_tries} tries")


def preferential_attachment_graph(n: int, m: int, seed: int) -> WeightedGraph:
    """Seed clique on ``m + 1`` vertices, then ``m`` degree-proportional draws per arrival.

    Draws are with replacement; repeated targets become edge weight.
    """
    _require(m >= 1 and n >= m + 2, f"preferential_attachment needs m >= 1 and n >= m + 2, got n={n}, m={m}")
    rng = np.random.default_rng(seed)
    seed_size = m + 1
    edges = list(itertools.combinations(range(seed_size), 2))
    # one entry per unit of weighted degree
    pool = np.empty(2 * (len(edges) + m * (n - seed_size)), dtype=np.int64)
    fill = 0
    for u, v in edges:
        pool[fill], pool[fill + 1] = u, v
        fill += 2
    for new in range(seed_size, n):
        targets = pool[rng.integers(0, fill, size=m)]
        for t in targets.tolist():
            edges.append((new, t))
        pool[fill:fill + m] = targets
        pool[fill + m:fill + 2 * m] = new
        fill += 2 * m
    return WeightedGraph.from_edges(n, edges)


def build_family(spec: FamilySpec, *, max_tries: int = 1000) -> WeightedGraph:
    """Generate the graph described by ``spec``."""
    f = spec.family
    if f in ("cycle", "clique", "barbell"):
        _positive(spec, "n")
        return {"cycle": cycle_graph, "clique": clique_graph, "barbell": barbell_graph}[f](spec.n)
    if f == "torus":
        _positive(spec, "d", "side")
        return torus_graph(spec.d, spec.side)
    if f == "binary_tree":
        _positive(spec, "height")
        return binary_tree_graph(spec.height)
    if f == "hypercube":
        _positive(spec, "d")
        return hypercube_graph(spec.d)
    _require(spec.seed is not None, f"{f} needs an explicit seed")
    if f == "random_regular":
        _positive(spec, "n", "degree")
        return random_regular_graph(spec.n, spec.degree, spec.seed, max_tries=max_tries)
    _positive(spec, "n", "m")
    return preferential_attachment_graph(spec.n, spec.m, spec.seed)


# -- stationary distribution ------------------------------------------------

def stationary_distribution(g: WeightedGraph) -> np.ndarray:
    """``pi(v) = weighted_degree(v) / sum of weighted degrees``."""
    if g.n == 1:
        return np.ones(1)
    wd = g.weighted_degrees
    return wd / wd.sum()


def stationary_fractions(g: WeightedGraph) -> list[Fraction]:
    """Exact stationary distribution of a unit-weight graph."""
    if not g.is_unit_weight:
        raise GraphError("exact stationary fractions need unit weights")
    deg = g.degrees
    total = int(deg.sum())
    return [Fraction(int(d), total) for d in deg]


# -- reset graph -------------------------------------------------------------

@dataclass(frozen=True)
class ResetGraph:
    """Base graph plus a reset vertex ``z = n`` reached with probability ``x``."""

    base: WeightedGraph
    x: float
    graph: WeightedGraph = field(repr=False)

    @property
    def z(self) -> int:
        return self.base.n


def build_reset_graph(g: WeightedGraph, x: float) -> ResetGraph:
    if not 0.0 < x < 1.0:
        raise GraphError(f"reset rate x must lie in (0, 1), got {x}")
    if not g.is_unit_weight:
        raise GraphError("the reset graph is defined on a unit-weight base graph")
    z = g.n
    deg = g.degrees
    edges = [(u, v, w) for u, v, w in g.edges()]
    edges += [(u, z, x * float(deg[u]) / (1.0 - x)) for u in range(g.n)]
    return ResetGraph(base=g, x=float(x), graph=WeightedGraph.from_edges(g.n + 1, edges))


# -- hard sets ---------------------------------------------------------------

@dataclass(frozen=True)
class HardSet:
    name: str
    vertices: np.ndarray
    boundary: np.ndarray
    mass: float

    def __len__(self) -> int:
        return int(self.vertices.size)


def vertex_boundary(g: WeightedGraph, members: np.ndarray) -> np.ndarray:
    """Vertices of the set with at least one neighbour outside it."""
    inside = np.zeros(g.n, dtype=bool)
    inside[members] = True
    out = [v for v in np.flatnonzero(inside) if not inside[g.neighbors(v)].all()]
    return np.array(out, dtype=np.int64)


def make_hard_set(g: WeightedGraph, name: str, members, pi: np.ndarray | None = None) -> HardSet:
    members = np.unique(np.asarray(members, dtype=np.int64))
    pi = stationary_distribution(g) if pi is None else pi
    return HardSet(name, members, vertex_boundary(g, members), float(pi[members].sum()))


def canonical_hard_sets(g: WeightedGraph, spec: FamilySpec, anchor: int = 0) -> list[HardSet]:
    """Family-specific large sets that are slow to reach from ``anchor``.

    Random families have no canonical catalogue and return ``[]``.
    """
    f = spec.family
    pi = stationary_distribution(g)
    n = g.n
    sets: list[HardSet] = []
    if f == "cycle":
        dist = g.distances_from(anchor)
        sets.append(make_hard_set(g, "far_half_arc", np.flatnonzero(dist >= n // 4), pi))
    elif f == "torus":
        coords = torus_coordinates(spec.d, spec.side)
        delta = np.abs(coords[:, 0] - coords[anchor, 0])
        delta = np.minimum(delta, spec.side - delta)
        sets.append(make_hard_set(g, "far_half_subtorus", np.flatnonzero(delta >= spec.side // 4), pi))
    elif f == "binary_tree":
        heap = np.arange(1, n + 1)
        sets.append(make_hard_set(g, "leaves", np.flatnonzero(heap >= 2**spec.height), pi))
        # the root subtree not containing the anchor
        anc = anchor + 1
        while anc > 3:
            anc //= 2
        other = 3 if anc == 2 else 2
        sub = [h - 1 for h in heap if _in_subtree(int(h), other)]
        sets.append(make_hard_set(g, "far_subtree", sub, pi))
    elif f == "hypercube":
        ham = np.array([bin(v ^ anchor).count("1") for v in range(n)])
        sets.append(make_hard_set(g, "far_half_ball", np.flatnonzero(ham > spec.d / 2), pi))
    elif f == "barbell":
        half = n // 2
        far = np.arange(half, n) if anchor < half else np.arange(half)
        sets.append(make_hard_set(g, "far_clique", far, pi))
    elif f == "clique":
        others = np.array([v for v in range(n) if v != anchor])
        sets.append(make_hard_set(g, "quarter_block", others[: max(1, -(-n // 4))], pi))
    else:
        log.warning("no canonical hard sets for family %s", f)
        return []
    return [s for s in sets if s.mass >= 0.25]


def _in_subtree(h: int, root: int) -> bool:
    while h > root:
        h //= 2
    return h == root


# -- small-graph catalogue ---------------------------------------------------

def _graph6_lines(n: int) -> list[str]:
    data = resources.files("multiwalk.data").joinpath(f"connected_n{n}.g6")
    return [ln.strip() for ln in data.read_text().splitlines() if ln.strip()]


def connected_graphs(n: int) -> list[WeightedGraph]:
    """All connected unlabelled graphs on ``n`` vertices (``1 <= n <= 8``)."""
    import networkx as nx

    if n < 1 or n > 8:
        raise GraphError("the catalogue covers 1 <= n <= 8")
    if n <= 7:
        graphs = [h for h in nx.graph_atlas_g() if h.number_of_nodes() == n and nx.is_connected(h)]
        return [WeightedGraph.from_networkx(h) for h in graphs]
    return [WeightedGraph.from_networkx(nx.from_graph6_bytes(s.encode())) for s in _graph6_lines(n)]


def enumerate_connected_graphs(n: int):
    """Regenerate the ``n``-vertex catalogue from the ``n-1`` atlas (slow for n=8).

    Every graph on ``n`` vertices arises from some graph on ``n-1`` vertices
    by attaching a new vertex; duplicates are removed by isomorphism tests
    inside invariant buckets.
    """
    import networkx as nx

    smaller = [h for h in nx.graph_atlas_g() if h.number_of_nodes() == n - 1]
    buckets: dict[tuple, list] = {}
    found = []
    for base in smaller:
        for r in range(1, n):
            for nb in itertools.combinations(range(n - 1), r):
                h = base.copy()
                h.add_node(n - 1)
                h.add_edges_from((n - 1, u) for u in nb)
                if not nx.is_connected(h):
                    continue
                key = (
                    tuple(sorted(d for _, d in h.degree())),
                    tuple(sorted(nx.triangles(h).values())),
                )
                bucket = buckets.setdefault(key, [])
                if any(nx.is_isomorphic(h, o) for o in bucket):
                    continue
                bucket.append(h)
                found.append(h)
    return found
