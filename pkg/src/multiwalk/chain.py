"""Exact dense-matrix analysis of a single random walk.

Distances, mixing and partial mixing times, large-set hitting times,
spectral gap, return sums, hitting times and conductance. Everything
works on a dense row-stochastic matrix, so the module refuses chains
larger than ``MAX_DENSE_N`` and leaves those to Monte-Carlo.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix

from .graphs import FamilySpec, WeightedGraph, canonical_hard_sets, stationary_distribution

MAX_DENSE_N = 4096
MAX_EXHAUSTIVE_HIT_N = 16
MAX_EXHAUSTIVE_CONDUCTANCE_N = 20
EIGH_MAX_N = 512
# slack for threshold comparisons on floating point distances
TOL = 1e-12


class ChainError(ValueError):
    pass


class GuardError(ChainError):
    """Problem size exceeds a dense or exhaustive guard."""


class ConvergenceError(ChainError):
    def __init__(self, msg: str, residual: float):
        super().__init__(f"{msg} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class TransitionMatrix:
    P: np.ndarray
    pi: np.ndarray
    lazy: bool

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def reversibility_residual(self) -> float:
        flow = self.pi[:, None] * self.P
        return float(np.abs(flow - flow.T).max())

    def flow(self) -> np.ndarray:
        """Ergodic flow matrix ``pi(a) P(a, b)``."""
        return self.pi[:, None] * self.P

    def sparse_transpose(self) -> csr_matrix:
        return csr_matrix(self.P.T)


def transition_matrix(g: WeightedGraph, lazy: bool = True, max_n: int = MAX_DENSE_N) -> TransitionMatrix:
    """Walk matrix of ``g``; the lazy walk holds with probability 1/2."""
    if g.n > max_n:
        raise GuardError(f"n={g.n} exceeds the dense guard {max_n}; use the Monte-Carlo estimators")
    if g.n == 1:
        return TransitionMatrix(np.ones((1, 1)), np.ones(1), lazy)
    W = g.to_dense()
    P = W / W.sum(axis=1, keepdims=True)
    if lazy:
        P = 0.5 * P
        P[np.diag_indices_from(P)] += 0.5
    return TransitionMatrix(P, stationary_distribution(g), lazy)


def transition_fractions(g: WeightedGraph, lazy: bool = True) -> list[dict[int, Fraction]]:
    """Exact rows of the walk matrix for a unit-weight graph."""
    if not g.is_unit_weight:
        raise ChainError("exact transition fractions need unit weights")
    rows = []
    for u in range(g.n):
        deg = int(g.degrees[u])
        move = Fraction(1, 2 * deg) if lazy else Fraction(1, deg)
        row = {int(v): move for v in g.neighbors(u)}
        if lazy:
            row[u] = Fraction(1, 2)
        rows.append(row)
    return rows


# -- distances ---------------------------------------------------------------

def tv_distance(Pt: np.ndarray, pi: np.ndarray) -> float:
    return float(0.5 * np.abs(Pt - pi[None, :]).sum(axis=1).max())


def separation(Pt: np.ndarray, pi: np.ndarray) -> float:
    return float(min(max((1.0 - Pt / pi[None, :]).max(), 0.0), 1.0))


@dataclass
class DistanceProfile:
    """Worst-start total variation ``d[t]`` and separation ``s[t]`` for ``t = 0..t_max``."""

    d: np.ndarray
    s: np.ndarray

    @property
    def t_max(self) -> int:
        return self.d.size - 1

    def mixing_time(self, eps: float = 0.25) -> int | None:
        """First ``t >= 0`` with ``d(t) <= eps``; ``None`` if not reached."""
        return _first_index(self.d, eps, 0)

    def separation_time(self, eps: float = math.exp(-1)) -> int | None:
        return _first_index(self.s, eps, 0)

    def partial_mixing_time(self, k_tilde: int, k: int) -> int | None:
        _check_pair(k_tilde, k)
        return _first_index(self.s, 1.0 - k_tilde / k, 1)

    def thresholds(self, pairs: Sequence[tuple[int, int]] = ()) -> dict:
        out = {"t_max": self.t_max, "t_mix": self.mixing_time(0.25), "t_sep": self.separation_time()}
        for kt, k in pairs:
            out[f"t_mix({kt},{k})"] = self.partial_mixing_time(kt, k)
        return out

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "d", "s"])
        for t in range(self.d.size):
            w.writerow([t, f"{self.d[t]:.9g}", f"{self.s[t]:.9g}"])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def _first_index(arr: np.ndarray, eps: float, start: int) -> int | None:
    hits = np.flatnonzero(arr[start:] <= eps + TOL)
    return int(hits[0] + start) if hits.size else None


def _check_pair(k_tilde: int, k: int) -> None:
    if not (1 <= k_tilde < k):
        raise ChainError(f"need 1 <= k_tilde < k, got k_tilde={k_tilde}, k={k}")


def distance_profile(tm: TransitionMatrix, t_max: int) -> DistanceProfile:
    """Exact ``d(t)`` and ``s(t)`` by successive matrix powers."""
    if t_max < 1:
        raise ChainError("t_max must be >= 1")
    pi = tm.pi
    d = np.empty(t_max + 1)
    s = np.empty(t_max + 1)
    Pt = np.eye(tm.n)
    for t in range(t_max + 1):
        if t:
            Pt = Pt @ tm.P
        d[t] = tv_distance(Pt, pi)
        s[t] = separation(Pt, pi)
    return DistanceProfile(d, s)


def _first_crossing(P: np.ndarray, metric, eps: float, t_min: int, t_max: int) -> int | None:
    """First ``t >= t_min`` with ``metric(P**t) <= eps`` for a metric non-increasing in t.

    Squares ``P`` until the threshold is crossed, then binary-lifts through
    the stored powers.
    """
    if t_min == 0 and metric(np.eye(P.shape[0])) <= eps + TOL:
        return 0
    powers = [P]
    if metric(P) <= eps + TOL:
        return 1
    while True:
        if 2 ** (len(powers) - 1) >= t_max:
            return None
        nxt = powers[-1] @ powers[-1]
        powers.append(nxt)
        if metric(nxt) <= eps + TOL:
            break
    j = len(powers) - 1
    lo = 2 ** (j - 1)
    M = powers[j - 1]
    for i in range(j - 2, -1, -1):
        cand = M @ powers[i]
        if metric(cand) > eps + TOL:
            M = cand
            lo += 2**i
    t = lo + 1
    return t if t <= t_max else None


def mixing_time(tm: TransitionMatrix, eps: float = 0.25, t_max: int = 2**40) -> int | None:
    return _first_crossing(tm.P, lambda M: tv_distance(M, tm.pi), eps, 0, t_max)


def separation_time(tm: TransitionMatrix, eps: float = math.exp(-1), t_max: int = 2**40) -> int | None:
    return _first_crossing(tm.P, lambda M: separation(M, tm.pi), eps, 0, t_max)


def partial_mixing_time(chain, k_tilde: int, k: int, t_max: int = 2**40) -> int | None:
    """First ``t >= 1`` with ``s(t) <= 1 - k_tilde/k``.

    ``chain`` is a :class:`DistanceProfile` or a :class:`TransitionMatrix`;
    the latter is searched by repeated squaring, so it scales to times far
    beyond what a stored profile can hold.
    """
    _check_pair(k_tilde, k)
    if isinstance(chain, DistanceProfile):
        return chain.partial_mixing_time(k_tilde, k)
    return _first_crossing(chain.P, lambda M: separation(M, chain.pi), 1.0 - k_tilde / k, 1, t_max)


# -- hitting sets ------------------------------------------------------------

def _as_mask(n: int, S) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    mask[np.asarray(S, dtype=np.int64)] = True
    if not mask.any():
        raise ChainError("target set must be nonempty")
    return mask


def hit_probability_within(tm: TransitionMatrix, S, t: int) -> np.ndarray:
    """``P_u(tau_S <= t)`` for every start ``u``; starting inside ``S`` counts as a hit."""
    mask = _as_mask(tm.n, S)
    h = mask.astype(float)
    for _ in range(int(t)):
        h = np.where(mask, 1.0, tm.P @ h)
    return h


def hit_probability_curves(tm: TransitionMatrix, masks: np.ndarray, t_max: int) -> np.ndarray:
    """``curve[t] = min over starts u and sets S of P_u(tau_S <= t)`` for ``t = 0..t_max``.

    ``masks`` is a boolean ``(n, n_sets)`` array, one column per set.
    """
    H = masks.astype(float)
    curve = np.empty(t_max + 1)
    curve[0] = H.min()
    for t in range(1, t_max + 1):
        H = np.where(masks, 1.0, tm.P @ H)
        curve[t] = H.min()
    return curve


def large_sets_exhaustive(pi: np.ndarray, min_mass: float = 0.25) -> np.ndarray:
    """Boolean ``(n, n_sets)`` array of every subset with ``pi(S) >= min_mass``."""
    n = pi.size
    if n > MAX_EXHAUSTIVE_HIT_N:
        raise GuardError(f"exhaustive set scan limited to n <= {MAX_EXHAUSTIVE_HIT_N}, got {n}")
    codes = np.arange(1, 2**n, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(n)) & 1).astype(bool)
    mass = bits @ pi
    return bits[mass >= min_mass - TOL].T.copy()


@dataclass(frozen=True)
class LargeHit:
    time: int | None
    provenance: str  # "exact" | "explicit" | "catalog-upper-bound"
    n_sets: int
    worst_set: tuple[int, ...] | None = None


def large_hit_time(
    tm: TransitionMatrix,
    k_tilde: int,
    k: int,
    sets="exhaustive",
    *,
    graph: WeightedGraph | None = None,
    spec: FamilySpec | None = None,
    t_max: int = 2**40,
) -> LargeHit:
    """First ``t >= 1`` with ``P_u(tau_S <= t) >= k_tilde/k`` for all starts and supplied sets.

    ``sets`` is ``"exhaustive"`` (every ``S`` with ``pi(S) >= 1/4``, small
    chains only), ``"catalog"`` (the family's canonical hard sets; needs
    ``graph`` and ``spec``) or an explicit list of vertex sets. Only the
    exhaustive mode returns the true minimum over sets; the other modes
    give an upper bound on it and say so in ``provenance``.
    """
    _check_pair(k_tilde, k)
    thr = k_tilde / k
    if isinstance(sets, str) and sets == "exhaustive":
        masks = large_sets_exhaustive(tm.pi)
        t = _batched_first_hit(tm, masks, thr, t_max)
        return LargeHit(t, "exact", masks.shape[1])
    if isinstance(sets, str) and sets == "catalog":
        if graph is None or spec is None:
            raise ChainError("catalog mode needs the graph and its FamilySpec")
        catalog = canonical_hard_sets(graph, spec)
        if not catalog:
            raise ChainError(f"empty hard-set catalog for {spec.family}")
        members = [hs.vertices for hs in catalog]
        provenance = "catalog-upper-bound"
    else:
        members = [np.asarray(S, dtype=np.int64) for S in sets]
        if not members:
            raise ChainError("no sets supplied")
        provenance = "explicit"
    worst_t, worst_S = 0, None
    for S in members:
        t = _first_hit_lifting(tm, S, thr, t_max)
        if t is None:
            return LargeHit(None, provenance, len(members), tuple(int(v) for v in S))
        if t > worst_t:
            worst_t, worst_S = t, tuple(int(v) for v in S)
    return LargeHit(worst_t, provenance, len(members), worst_S)


def _batched_first_hit(tm: TransitionMatrix, masks: np.ndarray, thr: float, t_max: int) -> int | None:
    H = masks.astype(float)
    t = 0
    while t < t_max:
        t += 1
        H = np.where(masks, 1.0, tm.P @ H)
        if H.min() >= thr - TOL:
            return t
        if t > 64 * tm.n**3 + 64:
            break
    return None


def _first_hit_lifting(tm: TransitionMatrix, S, thr: float, t_max: int) -> int | None:
    outside = ~_as_mask(tm.n, S)
    if not outside.any():
        return 1
    Q = tm.P[np.ix_(outside, outside)]
    # P_u(tau_S > t) = (Q^t 1)_u for u outside S
    metric = lambda M: float(M.sum(axis=1).max())
    return _first_crossing(Q, metric, 1.0 - thr, 1, t_max)


# -- spectrum, returns, hitting times ------------------------------------------

@dataclass(frozen=True)
class SpectralSummary:
    lambda2: float
    t_rel: float
    residual: float
    method: str


def relaxation_time(tm: TransitionMatrix, *, tol: float = 1e-10, max_iter: int = 200_000) -> SpectralSummary:
    """Second largest eigenvalue of the pi-symmetrised walk and ``t_rel = 1/(1 - lambda2)``."""
    n = tm.n
    if n == 1:
        return SpectralSummary(0.0, 1.0, 0.0, "trivial")
    r = np.sqrt(tm.pi)
    A = r[:, None] * tm.P / r[None, :]
    A = 0.5 * (A + A.T)
    if n <= EIGH_MAX_N:
        vals, vecs = np.linalg.eigh(A)
        lam, vec = vals[-2], vecs[:, -2]
        method = "eigh"
    else:
        lam, vec = _power_second(A, r, tol, max_iter)
        method = "power"
    residual = float(np.linalg.norm(A @ vec - lam * vec))
    if residual > 1e-8:
        raise ConvergenceError("second eigenvector did not converge", residual)
    lam = float(min(lam, 1.0))
    t_rel = math.inf if lam >= 1.0 else 1.0 / (1.0 - lam)
    return SpectralSummary(lam, t_rel, residual, method)


def _power_second(A: np.ndarray, top: np.ndarray, tol: float, max_iter: int):
    # spectrum of (I + A)/2 lies in [0, 1] with the same ordering
    B = 0.5 * (np.eye(A.shape[0]) + A)
    top = top / np.linalg.norm(top)
    x = np.random.default_rng(0).standard_normal(A.shape[0])
    res = math.inf
    for _ in range(max_iter):
        x -= top * (top @ x)
        x /= np.linalg.norm(x)
        y = B @ x
        mu = float(x @ y)
        res = float(np.linalg.norm(y - mu * x))
        if res < tol:
            return 2.0 * mu - 1.0, x
        x = y
    raise ConvergenceError("power iteration for lambda2 did not converge", res)


def return_curve(tm: TransitionMatrix, v: int, t: int) -> np.ndarray:
    """Cumulative return sums ``sum_{i<=j} P^i(v, v)`` for ``j = 0..t``."""
    PT = tm.sparse_transpose()
    x = np.zeros(tm.n)
    x[v] = 1.0
    out = np.empty(int(t) + 1)
    out[0] = 1.0
    for i in range(1, int(t) + 1):
        x = PT @ x
        out[i] = out[i - 1] + x[v]
    return out


def return_sum(tm: TransitionMatrix, v: int, t: int) -> float:
    """``sum_{i=0}^{t} P^i(v, v)``."""
    if t < 0:
        raise ChainError("t must be >= 0")
    return float(return_curve(tm, v, t)[-1])


@dataclass(frozen=True)
class HittingTimes:
    to_target: np.ndarray  # E_u[tau_v] for every u
    from_stationary: float  # E_pi[tau_v]
    identity_gap: float  # relative gap to the fundamental-matrix route


def hitting_expectation(tm: TransitionMatrix, v: int, rtol: float = 1e-6) -> HittingTimes:
    """Expected hitting times of ``v`` by a linear solve with ``v`` absorbing.

    Cross-checked against ``pi(v) E_pi[tau_v] = Z(v, v) - pi(v)`` where ``Z``
    is the fundamental matrix.
    """
    n = tm.n
    h = np.zeros(n)
    if n > 1:
        keep = np.arange(n) != v
        A = np.eye(n - 1) - tm.P[np.ix_(keep, keep)]
        try:
            h[keep] = np.linalg.solve(A, np.ones(n - 1))
        except np.linalg.LinAlgError as exc:
            raise ChainError(f"singular hitting system for target {v}: {exc}") from exc
    e_pi = float(tm.pi @ h)
    M = np.eye(n) - tm.P + np.outer(np.ones(n), tm.pi)
    e = np.zeros(n)
    e[v] = 1.0
    zvv = float(np.linalg.solve(M, e)[v])
    other = (zvv - tm.pi[v]) / tm.pi[v]
    gap = abs(other - e_pi) / max(abs(e_pi), 1.0)
    if gap > rtol:
        raise ChainError(f"hitting time routes disagree for target {v}: {e_pi} vs {other}")
    return HittingTimes(h, e_pi, gap)


def stationary_hitting_all(tm: TransitionMatrix) -> np.ndarray:
    """``E_pi[tau_v]`` for every ``v`` from one fundamental-matrix inverse."""
    n = tm.n
    Z = np.linalg.inv(np.eye(n) - tm.P + np.outer(np.ones(n), tm.pi))
    return (np.diag(Z) - tm.pi) / tm.pi


def max_stationary_hitting(tm: TransitionMatrix) -> float:
    return float(stationary_hitting_all(tm).max())


def return_identity_partial(tm: TransitionMatrix, v: int, T: int) -> float:
    """``sum_{i=0}^{T} (P^i(v, v) - pi(v))``."""
    return float(return_curve(tm, v, T)[-1] - (T + 1) * tm.pi[v])


# -- conductance ---------------------------------------------------------------

def ergodic_flow(tm: TransitionMatrix, A, B) -> float:
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    return float((tm.pi[A, None] * tm.P[np.ix_(A, B)]).sum())


def set_conductance(tm: TransitionMatrix, S) -> float:
    mask = _as_mask(tm.n, S)
    mass = float(tm.pi[mask].sum())
    if not 0.0 < mass <= 0.5 + TOL:
        raise ChainError(f"conductance of a set needs 0 < pi(S) <= 1/2, got {mass}")
    cut = ergodic_flow(tm, np.flatnonzero(mask), np.flatnonzero(~mask))
    return cut / mass


def conductance_minimizer(tm: TransitionMatrix, chunk: int = 1 << 15) -> tuple[float, np.ndarray]:
    """Exhaustive minimum of ``Q(S, S^c) / pi(S)`` over ``0 < pi(S) <= 1/2``."""
    n = tm.n
    if n > MAX_EXHAUSTIVE_CONDUCTANCE_N:
        raise GuardError(f"exhaustive conductance limited to n <= {MAX_EXHAUSTIVE_CONDUCTANCE_N}, got {n}")
    if n < 2:
        raise ChainError("conductance needs at least two vertices")
    F = tm.flow()
    np.fill_diagonal(F, 0.0)
    shifts = np.arange(n)
    best, best_code = math.inf, 0
    for start in range(1, 2**n, chunk):
        codes = np.arange(start, min(start + chunk, 2**n), dtype=np.int64)
        X = ((codes[:, None] >> shifts) & 1).astype(float)
        mass = X @ tm.pi
        cut = ((X @ F) * (1.0 - X)).sum(axis=1)
        ok = (mass > 0) & (mass <= 0.5 + TOL)
        if not ok.any():
            continue
        phi = np.where(ok, cut / np.where(ok, mass, 1.0), np.inf)
        i = int(np.argmin(phi))
        if phi[i] < best:
            best, best_code = float(phi[i]), int(codes[i])
    members = np.flatnonzero((best_code >> shifts) & 1)
    return best, members


def conductance(tm: TransitionMatrix, subset=None) -> float:
    """``Phi(S)`` for ``subset``, or the exhaustive ``Phi(G)`` when ``subset`` is None."""
    if subset is not None:
        return set_conductance(tm, subset)
    return conductance_minimizer(tm)[0]
