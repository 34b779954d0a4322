"""Inner loops for walk simulation and subset enumeration.

Each kernel exists twice: a scalar loop compiled with numba, and a
vectorised numpy version used when numba is unavailable or disabled via
``MULTIWALK_DISABLE_NUMBA``. Both consume the caller's uniforms in the
same order (one uniform per walk-step, walks in index order), so the two
backends return identical results for identical inputs.

Neighbour choice from vertex ``a`` with uniform ``v`` in ``[0, 1)``:
unit-weight graphs take ``indices[indptr[a] + floor(v * deg(a))]``;
weighted graphs take the first slot ``j`` with ``keys[j] > a + v`` where
``keys`` holds ``a +`` the normalised cumulative weights of ``a``'s row.
A lazy step stays put when ``u < 1/2`` and otherwise reuses ``2u - 1``.
"""
from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit


def neighbor_keys(indptr: np.ndarray, weights: np.ndarray) -> np.ndarray:
    n = indptr.size - 1
    keys = np.empty(weights.size, dtype=np.float64)
    for a in range(n):
        lo, hi = indptr[a], indptr[a + 1]
        c = np.cumsum(weights[lo:hi])
        c /= c[-1]
        c[-1] = 1.0
        keys[lo:hi] = a + c
    return keys


# -- scalar loops (compiled when numba is present) ----------------------------

def _pick_loop(a, v, indptr, indices, keys, unit):
    lo = indptr[a]
    hi = indptr[a + 1]
    if unit:
        deg = hi - lo
        j = int(v * deg)
        if j >= deg:
            j = deg - 1
        return indices[lo + j]
    x = a + v
    left = lo
    right = hi - 1
    while left < right:
        mid = (left + right) // 2
        if keys[mid] > x:
            right = mid
        else:
            left = mid + 1
    return indices[left]


def _advance_loop(pos, covered, remaining, stop_at, target, indptr, indices, keys,
                  unit, lazy, u, t, horizon):
    k = pos.size
    steps = u.size // k
    for s in range(steps):
        base = s * k
        for i in range(k):
            r = u[base + i]
            if lazy:
                if r < 0.5:
                    continue
                r = (r - 0.5) * 2.0
            nv = _pick(pos[i], r, indptr, indices, keys, unit)
            pos[i] = nv
            if target[nv] and not covered[nv]:
                covered[nv] = True
                remaining -= 1
        t += 1
        if remaining <= stop_at or t >= horizon:
            break
    return t, remaining


def _paths_loop(starts, indptr, indices, keys, unit, lazy, u, out):
    w, steps = u.shape
    for i in range(w):
        a = starts[i]
        out[i, 0] = a
        for s in range(steps):
            r = u[i, s]
            if lazy:
                if r < 0.5:
                    out[i, s + 1] = a
                    continue
                r = (r - 0.5) * 2.0
            a = _pick(a, r, indptr, indices, keys, unit)
            out[i, s + 1] = a
    return out


def _gray_conductance_loop(flow, pi, half):
    """Minimum of cut/pi(S) over subsets with 0 < pi(S) <= half, Gray-code order."""
    n = pi.size
    inside = np.zeros(n, dtype=np.bool_)
    cut = 0.0
    mass = 0.0
    best = np.inf
    best_mask = 0
    mask = 0
    for step in range(1, 1 << n):
        v = 0
        while not (step >> v) & 1:
            v += 1
        delta = 0.0
        for b in range(n):
            if b != v:
                if inside[b]:
                    delta -= flow[b, v]
                else:
                    delta += flow[v, b]
        if inside[v]:
            inside[v] = False
            cut -= delta
            mass -= pi[v]
        else:
            inside[v] = True
            cut += delta
            mass += pi[v]
        mask ^= 1 << v
        if 0.0 < mass <= half:
            phi = cut / mass
            if phi < best:
                best = phi
                best_mask = mask
    return best, best_mask


if USE_NUMBA:
    _pick = njit(cache=True, nogil=True)(_pick_loop)
    advance_numba = njit(cache=True, nogil=True)(_advance_loop)
    paths_numba = njit(cache=True, nogil=True)(_paths_loop)
    gray_conductance = njit(cache=True)(_gray_conductance_loop)
else:
    _pick = _pick_loop
    advance_numba = None
    paths_numba = None
    gray_conductance = _gray_conductance_loop


# -- numpy versions ------------------------------------------------------------

def _pick_numpy(a, v, indptr, indices, keys, unit):
    if unit:
        lo = indptr[a]
        deg = indptr[a + 1] - lo
        j = np.minimum((v * deg).astype(np.int64), deg - 1)
        return indices[lo + j]
    return indices[np.searchsorted(keys, a + v, side="right")]


def advance_numpy(pos, covered, remaining, stop_at, target, indptr, indices, keys,
                  unit, lazy, u, t, horizon):
    k = pos.size
    steps = u.size // k
    u = u[: steps * k].reshape(steps, k)
    for s in range(steps):
        r = u[s]
        if lazy:
            moving = r >= 0.5
            if moving.any():
                pos[moving] = _pick_numpy(pos[moving], (r[moving] - 0.5) * 2.0,
                                          indptr, indices, keys, unit)
        else:
            pos[:] = _pick_numpy(pos, r, indptr, indices, keys, unit)
        fresh = pos[target[pos] & ~covered[pos]]
        if fresh.size:
            fresh = np.unique(fresh)
            covered[fresh] = True
            remaining -= int(fresh.size)
        t += 1
        if remaining <= stop_at or t >= horizon:
            break
    return t, remaining


def paths_numpy(starts, indptr, indices, keys, unit, lazy, u, out):
    a = starts.astype(np.int64).copy()
    out[:, 0] = a
    for s in range(u.shape[1]):
        r = u[:, s]
        if lazy:
            moving = r >= 0.5
            if moving.any():
                a[moving] = _pick_numpy(a[moving], (r[moving] - 0.5) * 2.0,
                                        indptr, indices, keys, unit)
        else:
            a = _pick_numpy(a, r, indptr, indices, keys, unit)
        out[:, s + 1] = a
    return out


advance = advance_numba if USE_NUMBA else advance_numpy
sample_paths_kernel = paths_numba if USE_NUMBA else paths_numpy
