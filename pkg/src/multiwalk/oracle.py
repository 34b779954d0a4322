"""Brute-force ground truth for tiny instances.

The routines here avoid the shortcuts used elsewhere in the package:
cover times come from the full product chain over (positions, covered
set), large-hit times from per-set absorbing matrices, and conductance
from Gray-code subset enumeration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from . import kernels
from .chain import TransitionMatrix, transition_matrix
from .graphs import WeightedGraph, stationary_distribution
from .walks import AllAtVertex, DistributionOnSet, ExplicitTuple, StationaryProduct

MAX_PRODUCT_STATES = 10**6
MAX_LARGE_HIT_N = 16
MAX_CONDUCTANCE_N = 20


class OracleGuardError(RuntimeError):
    pass


# -- product chain -------------------------------------------------------------------

class ProductChain:
    """The joint chain of ``k`` independent walks plus the set of visited vertices.

    A state is ``(mask, a)`` where ``a`` indexes the position tuple in
    base ``n`` (walk 0 is the most significant digit) and ``mask`` is the
    covered set. Only states whose mask contains every position are kept,
    and the all-covered states are absorbing and dropped.
    """

    def __init__(self, g: WeightedGraph, k: int, lazy: bool = True):
        n = g.n
        if k < 1:
            raise ValueError("k must be >= 1")
        if n**k * 2**n > MAX_PRODUCT_STATES:
            raise OracleGuardError(f"n^k*2^n = {n**k * 2**n} exceeds {MAX_PRODUCT_STATES}")
        self.g, self.k, self.n, self.lazy = g, k, n, lazy
        self.N = n**k
        self.full = (1 << n) - 1
        digits = np.array(np.unravel_index(np.arange(self.N), (n,) * k)).reshape(k, self.N)
        self.tuples = digits.T
        self.tuple_bits = np.bitwise_or.reduce(1 << digits, axis=0).astype(np.int64)

        P = sp.csr_matrix(transition_matrix(g, lazy=lazy).P)
        Pk = P
        for _ in range(k - 1):
            Pk = sp.kron(Pk, P, format="csr")
        Pk = Pk.tocoo()

        masks = np.arange(self.full, dtype=np.int64)  # non-full masks
        valid = (masks[:, None] & self.tuple_bits[None, :]) == self.tuple_bits[None, :]
        self.index = -np.ones((self.full + 1) * self.N, dtype=np.int64)
        flat = np.flatnonzero(valid.ravel())
        self.index[flat] = np.arange(flat.size)
        self.size = flat.size

        rows, cols, vals = [], [], []
        for m in range(self.full):
            ok = valid[m][Pk.row]
            a, b, p = Pk.row[ok], Pk.col[ok], Pk.data[ok]
            nm = m | self.tuple_bits[b]
            live = nm != self.full
            rows.append(self.index[m * self.N + a[live]])
            cols.append(self.index[nm[live] * self.N + b[live]])
            vals.append(p[live])
        self.Q = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.size, self.size),
        )

    def start_distribution(self, start) -> tuple[np.ndarray, float]:
        """Initial mass on transient states and the mass already covered at t=0."""
        n, k = self.n, self.k
        weights = np.zeros(self.N)
        if isinstance(start, AllAtVertex):
            weights[np.ravel_multi_index((start.vertex,) * k, (n,) * k)] = 1.0
        elif isinstance(start, ExplicitTuple):
            if len(start.vertices) != k:
                raise ValueError("explicit start length must equal k")
            weights[np.ravel_multi_index(tuple(start.vertices), (n,) * k)] = 1.0
        elif isinstance(start, (StationaryProduct, DistributionOnSet)):
            if isinstance(start, StationaryProduct):
                mu = stationary_distribution(self.g)
            else:
                support, mass, _ = start.resolve(self.g)
                mu = np.zeros(n)
                mu[support] = mass
            weights = mu[self.tuples].prod(axis=1)
        else:
            raise TypeError(f"unsupported start {start!r}")
        x = np.zeros(self.size)
        covered_mass = 0.0
        for a in np.flatnonzero(weights):
            m = int(self.tuple_bits[a])
            if m == self.full:
                covered_mass += weights[a]
            else:
                x[self.index[m * self.N + a]] += weights[a]
        return x, covered_mass

    def expected_absorption(self) -> np.ndarray:
        A = sp.identity(self.size, format="csc") - self.Q.tocsc()
        return np.atleast_1d(spsolve(A, np.ones(self.size)))


def exact_multiwalk_cover_expectation(g: WeightedGraph, k: int, start, lazy: bool = True) -> float:
    """Exact expected cover time of ``k`` walks from ``start``."""
    if g.n == 1:
        return 0.0
    chain = ProductChain(g, k, lazy)
    x0, _ = chain.start_distribution(start)
    return float(x0 @ chain.expected_absorption())


def exact_cover_tail(g: WeightedGraph, k: int, start, t: int, lazy: bool = True) -> np.ndarray:
    """``P(tau_cov > s)`` for ``s = 0..t``, by propagating the transient mass."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if g.n == 1:
        return np.zeros(t + 1)
    chain = ProductChain(g, k, lazy)
    x, _ = chain.start_distribution(start)
    QT = chain.Q.T.tocsr()
    out = np.empty(t + 1)
    for s in range(t + 1):
        out[s] = x.sum()
        x = QT @ x
    return out


# -- visit counts --------------------------------------------------------------------

def avoidance_curves(tm: TransitionMatrix, t: int) -> np.ndarray:
    """``q[s, A] = P_pi(X_0, ..., X_s all outside A)`` for every subset bitmask ``A``.

    Shape ``(t + 1, 2^n)``; column 0 (empty set) is identically one.
    """
    n = tm.P.shape[0]
    if n > MAX_LARGE_HIT_N:
        raise OracleGuardError(f"n={n} exceeds subset guard {MAX_LARGE_HIT_N}")
    sets = np.arange(1 << n)
    outside = ((sets[None, :] >> np.arange(n)[:, None]) & 1) == 0  # (n, 2^n)
    H = outside.astype(float)
    q = np.empty((t + 1, 1 << n))
    for s in range(t + 1):
        q[s] = tm.pi @ H
        H = (tm.P @ H) * outside
    return q


@dataclass(frozen=True)
class VisitChecks:
    """Both sides of the visit-count statements for ``t = 1..t_max`` (index ``t - 1``).

    ``tail[t-1] = P_{pi^k}(tau_cov >= t)`` and ``union[t-1]`` is its
    exponential union bound. ``visit[t-1, v] = P_pi(X_v(t) >= 1)``,
    ``ratio`` is ``E X_v(t) / E[X_v(t) | X_v(t) >= 1]`` computed through the
    first-hit decomposition, and ``returns_lower`` is ``t pi(v) / sum_{i<=t} P^i_vv``.
    """

    k: int
    tail: np.ndarray
    union: np.ndarray
    visit: np.ndarray
    ratio: np.ndarray
    returns_lower: np.ndarray

    @property
    def union_violations(self) -> int:
        return int(np.count_nonzero(self.tail > self.union + 1e-9))

    @property
    def identity_gap(self) -> float:
        return float(np.max(np.abs(self.visit - self.ratio))) if self.visit.size else 0.0

    @property
    def lower_violations(self) -> int:
        return int(np.count_nonzero(self.visit < self.returns_lower - 1e-9))


def visit_count_checks(tm: TransitionMatrix, ks, t_max: int) -> list[VisitChecks]:
    """Evaluate both visit-count statements for each ``k`` in ``ks``.

    ``X_v(t)`` counts visits at times ``0..t-1`` so that ``E_pi X_v(t) = t pi(v)``.
    The cover tail is exact by inclusion-exclusion over the set of
    unvisited vertices, using independence of the ``k`` walks.
    """
    n = tm.P.shape[0]
    pi = tm.pi
    q = avoidance_curves(tm, t_max)
    sets = np.arange(1, 1 << n)
    popcount = np.array([bin(int(a)).count("1") for a in sets])
    sign = np.where(popcount % 2 == 1, 1.0, -1.0)
    singles = 1 << np.arange(n)

    returns = np.empty((t_max + 1, n))
    Pt = np.eye(n)
    for i in range(t_max + 1):
        returns[i] = np.diag(Pt)
        Pt = Pt @ tm.P
    R = np.cumsum(returns, axis=0)  # R[j] = sum_{i<=j} P^i_vv

    hit_cdf = 1.0 - q[:, singles]  # P_pi(tau_v <= s), s = 0..t_max
    first_hit = np.diff(np.vstack([np.zeros(n), hit_cdf]), axis=0)
    # E[X_v(t) 1{X_v(t) >= 1}] = sum_{s<t} P(tau_v = s) R[t-1-s]
    conv = np.column_stack([np.convolve(first_hit[:, v], R[:, v])[:t_max] for v in range(n)])
    ts = np.arange(1, t_max + 1)
    visit = hit_cdf[:t_max]  # row t-1 is P(tau_v <= t-1) = P(X_v(t) >= 1)
    mean = ts[:, None] * pi[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        conditional = np.where(visit > 0, conv / np.where(visit > 0, visit, 1.0), np.inf)
        ratio = np.where(np.isfinite(conditional), mean / conditional, 0.0)
    lower = mean / R[1 : t_max + 1]
    out = []
    for k in ks:
        tail = (q[:t_max, 1:] ** k) @ sign
        union = np.exp(-k * visit).sum(axis=1)
        out.append(VisitChecks(int(k), tail, union, visit, ratio, lower))
    return out


# -- large hit and conductance ---------------------------------------------------------

def exhaustive_large_hit(tm: TransitionMatrix, k_tilde: int, k: int, t_max: int = 10**6) -> int | None:
    """First ``t >= 1`` with ``P_u(tau_S <= t) >= k_tilde/k`` for all ``u`` and all ``S`` with ``pi(S) >= 1/4``.

    Each set is handled separately through its own sub-stochastic matrix
    on the complement.
    """
    n = tm.P.shape[0]
    if n > MAX_LARGE_HIT_N:
        raise OracleGuardError(f"n={n} exceeds large-hit guard {MAX_LARGE_HIT_N}")
    if not 1 <= k_tilde < k:
        raise ValueError("need 1 <= k_tilde < k")
    need = k_tilde / k
    worst = 1
    for bits in range(1, 1 << n):
        S = np.array([(bits >> v) & 1 for v in range(n)], dtype=bool)
        if tm.pi[S].sum() < 0.25 - 1e-12:
            continue
        C = ~S
        if not C.any():
            continue
        Q = tm.P[np.ix_(C, C)]
        avoid = np.ones(C.sum())
        t = 0
        while True:
            t += 1
            avoid = Q @ avoid
            if 1.0 - avoid.max() >= need - 1e-12:
                break
            if t >= t_max:
                return None
        worst = max(worst, t)
    return worst


@dataclass(frozen=True)
class ConductanceResult:
    phi: float
    members: tuple[int, ...]


def exhaustive_conductance(tm: TransitionMatrix) -> ConductanceResult:
    """Minimum of ``Q(S, S^c)/pi(S)`` over ``0 < pi(S) <= 1/2`` by Gray-code enumeration."""
    n = tm.P.shape[0]
    if n > MAX_CONDUCTANCE_N:
        raise OracleGuardError(f"n={n} exceeds conductance guard {MAX_CONDUCTANCE_N}")
    flow = tm.pi[:, None] * tm.P
    best, mask = kernels.gray_conductance(np.ascontiguousarray(flow), np.ascontiguousarray(tm.pi),
                                          0.5 + 1e-12)
    return ConductanceResult(float(best), tuple(v for v in range(n) if (int(mask) >> v) & 1))


# -- scalar inequalities ------------------------------------------------------------------

@dataclass(frozen=True)
class TailInstance:
    """A tail ``g(x) = P(X > x)`` satisfying ``g(l c) <= g(c)^l``.

    ``g`` equals ``block`` on ``0..c-1``; beyond that
    ``g(q c + r) = p^q block[r] / block[0]``, which keeps ``g`` non-increasing
    and gives ``g(l c) = p^l`` for ``l >= 1``.
    """

    block: np.ndarray
    p: float
    b: float
    a: int

    @property
    def c(self) -> int:
        return self.block.size

    @property
    def mean(self) -> float:
        total = float(self.block.sum())
        return total + total / float(self.block[0]) * self.p / (1.0 - self.p)

    def tail(self, x: int) -> float:
        q, r = divmod(int(x), self.c)
        if q == 0:
            return float(self.block[r])
        return float(self.p**q * self.block[r] / self.block[0])


def random_tail_instance(rng: np.random.Generator) -> TailInstance:
    c = int(rng.integers(1, 40))
    p = float(rng.uniform(0.0, 0.95))
    head = np.sort(rng.uniform(p, 1.0, size=c))[::-1]
    inst = TailInstance(head, p, 0.0, 0)
    b = float(rng.uniform(0.0, 1.0) * inst.mean)
    a = int(rng.integers(0, c))
    return TailInstance(head, p, b, a)


def check_tail_lemma(inst: TailInstance) -> tuple[bool, float, float]:
    """``P(X > a) >= (b - a)/(b + 2c)``; returns (holds, lhs, rhs)."""
    for ell in range(6):
        if inst.tail(ell * inst.c) > inst.tail(inst.c) ** ell * (1 + 1e-12):
            raise ValueError("instance violates the tail hypothesis")
    lhs = inst.tail(inst.a)
    rhs = (inst.b - inst.a) / (inst.b + 2 * inst.c)
    return lhs >= rhs - 1e-12, lhs, rhs


def exp_power_inequality(x: float, n: int) -> tuple[bool, float]:
    """``(1 + x/n)^n >= e^x (1 - x^2/n)`` for ``|x| <= n``; returns (holds, slack)."""
    if abs(x) > n:
        raise ValueError("need |x| <= n")
    rhs_factor = 1.0 - x * x / n
    if rhs_factor <= 0.0:
        return True, math.inf
    if x == -n:
        return False, -math.inf
    log_lhs = n * math.log1p(x / n)
    log_rhs = x + math.log(rhs_factor)
    slack = log_lhs - log_rhs
    return slack >= -1e-12, slack
