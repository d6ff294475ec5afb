"""Numerical kernels with optional numba acceleration.

Every kernel exists twice: a vectorized pure-numpy implementation
(``*_numpy``) and a loop implementation compiled with ``numba.njit``
(``*_numba``; None when compilation is off).  The module-level names
``cascade``, ``seed_sweep``, ``exact_powerset_sum`` and ``ks_scan`` point
at the selected variant.

Selection is controlled by the ``MULTIRISK_NUMBA`` environment variable,
read once at import time:

* unset or empty: use numba when it is importable, numpy otherwise;
* ``0``/``false``/``off``: force the pure-numpy path;
* ``1``/``true``/``on``: require numba, raising ImportError if missing.

Both variants implement identical arithmetic; results agree to floating
point round-off (summation order differs).  ``benchmarks/bench_kernels.py``
compares their throughput.
"""
from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("MULTIRISK_NUMBA", "").strip().lower()
if _FLAG in ("0", "false", "off", "no"):
    _WANT_NUMBA = False
elif _FLAG in ("1", "true", "on", "yes"):
    _WANT_NUMBA = True
else:
    _WANT_NUMBA = None  # auto

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAVE_NUMBA = False
    if _WANT_NUMBA:
        raise ImportError("MULTIRISK_NUMBA=1 but numba is not importable")

USING_NUMBA = HAVE_NUMBA if _WANT_NUMBA is None else (_WANT_NUMBA and HAVE_NUMBA)

__all__ = [
    "HAVE_NUMBA",
    "USING_NUMBA",
    "cascade",
    "seed_sweep",
    "exact_powerset_sum",
    "ks_scan",
    "cascade_numpy",
    "seed_sweep_numpy",
    "exact_powerset_sum_numpy",
    "ks_scan_numpy",
    "cascade_numba",
    "seed_sweep_numba",
    "exact_powerset_sum_numba",
    "ks_scan_numba",
]


# ---------------------------------------------------------------------------
# distress cascade
#
# State per node: 0 undistressed, 1 distressed, 2 inactive.  A distressed
# node transmits its current distress level once, in the round after it
# became distressed, then turns inactive.  Distress h accumulates additively
# and is capped at 1.  The loop runs at most b rounds because every node is
# distressed at most once.
# ---------------------------------------------------------------------------


def cascade_numpy(W: np.ndarray, h0: np.ndarray, seed_mask: np.ndarray):
    """Run one cascade; returns (final h, number of propagation rounds)."""
    b = W.shape[0]
    h = h0.astype(np.float64).copy()
    state = np.zeros(b, dtype=np.int8)
    state[seed_mask] = 1
    rounds = 0
    while True:
        distressed = state == 1
        if not distressed.any():
            break
        if rounds >= b:
            raise RuntimeError("cascade failed to terminate within b rounds")
        impact = W[distressed].T @ h[distressed]
        h = np.minimum(1.0, h + impact)
        state[distressed] = 2
        state[(h > 0.0) & (state == 0)] = 1
        rounds += 1
    return h, rounds


def _cascade_src(W, h0, seed_mask):
    b = W.shape[0]
    h = h0.copy()
    state = np.zeros(b, dtype=np.int8)
    any_distressed = False
    for i in range(b):
        if seed_mask[i]:
            state[i] = 1
            any_distressed = True
    rounds = 0
    while any_distressed:
        if rounds >= b:
            raise RuntimeError("cascade failed to terminate within b rounds")
        impact = np.zeros(b)
        for j in range(b):
            if state[j] == 1:
                hj = h[j]
                if hj > 0.0:
                    for i in range(b):
                        w = W[j, i]
                        if w > 0.0:
                            impact[i] += w * hj
                state[j] = 2
        any_distressed = False
        for i in range(b):
            if impact[i] > 0.0:
                hi = h[i] + impact[i]
                h[i] = 1.0 if hi > 1.0 else hi
                if state[i] == 0:
                    state[i] = 1
                    any_distressed = True
        rounds += 1
    return h, rounds


# ---------------------------------------------------------------------------
# single-seed sweep: cascade from every node alone, R_i = sum_j h_j v_j
# ---------------------------------------------------------------------------


def seed_sweep_numpy(W: np.ndarray, v: np.ndarray, psi: float) -> np.ndarray:
    b = W.shape[0]
    out = np.empty(b)
    for i in range(b):
        h0 = np.zeros(b)
        h0[i] = psi
        seed = np.zeros(b, dtype=np.bool_)
        seed[i] = True
        h, _ = cascade_numpy(W, h0, seed)
        r = float(h @ v)
        out[i] = 1.0 if r > 1.0 else r
    return out


def _seed_sweep_src(W, v, psi):
    b = W.shape[0]
    out = np.empty(b)
    for i in range(b):
        h0 = np.zeros(b)
        h0[i] = psi
        seed = np.zeros(b, dtype=np.bool_)
        seed[i] = True
        h, _ = _cascade_jit(W, h0, seed)
        r = 0.0
        for j in range(b):
            r += h[j] * v[j]
        out[i] = 1.0 if r > 1.0 else r
    return out


# ---------------------------------------------------------------------------
# exact expected systemic loss core
#
# Iterates all non-empty default sets in Gray-code order so exactly one
# membership bit flips per step; the subset probability is maintained
# incrementally.  Factors equal to zero (p = 0 or p = 1) are tracked by a
# counter instead of being multiplied in, so degenerate probabilities stay
# exact.  Returns sum over subsets S of P(S) * R_S; the caller multiplies
# by total economic value.
# ---------------------------------------------------------------------------


def exact_powerset_sum_numpy(W: np.ndarray, v: np.ndarray, p: np.ndarray, psi: float) -> float:
    b = W.shape[0]
    member = np.zeros(b, dtype=np.bool_)
    prod = 1.0
    zeros = 0
    for j in range(b):
        f = 1.0 - p[j]
        if f == 0.0:
            zeros += 1
        else:
            prod *= f
    total = 0.0
    prev_gray = 0
    for k in range(1, 1 << b):
        gray = k ^ (k >> 1)
        bit = (gray ^ prev_gray).bit_length() - 1
        prev_gray = gray
        if member[bit]:
            f_out, f_in = p[bit], 1.0 - p[bit]
        else:
            f_out, f_in = 1.0 - p[bit], p[bit]
        if f_out == 0.0:
            zeros -= 1
        else:
            prod /= f_out
        if f_in == 0.0:
            zeros += 1
        else:
            prod *= f_in
        member[bit] = not member[bit]
        if zeros > 0:
            continue
        h0 = np.where(member, psi, 0.0)
        h, _ = cascade_numpy(W, h0, member)
        r = min(1.0, float(h @ v))
        total += prod * r
    return total


def _exact_powerset_sum_src(W, v, p, psi):
    b = W.shape[0]
    member = np.zeros(b, dtype=np.bool_)
    prod = 1.0
    zeros = 0
    for j in range(b):
        f = 1.0 - p[j]
        if f == 0.0:
            zeros += 1
        else:
            prod *= f
    total = 0.0
    prev_gray = 0
    h0 = np.zeros(b)
    for k in range(1, 1 << b):
        gray = k ^ (k >> 1)
        diff = gray ^ prev_gray
        prev_gray = gray
        bit = 0
        while (diff >> bit) & 1 == 0:
            bit += 1
        if member[bit]:
            f_out = p[bit]
            f_in = 1.0 - p[bit]
        else:
            f_out = 1.0 - p[bit]
            f_in = p[bit]
        if f_out == 0.0:
            zeros -= 1
        else:
            prod /= f_out
        if f_in == 0.0:
            zeros += 1
        else:
            prod *= f_in
        member[bit] = not member[bit]
        if zeros > 0:
            continue
        for i in range(b):
            h0[i] = psi if member[i] else 0.0
        h, _ = _cascade_jit(W, h0, member)
        r = 0.0
        for i in range(b):
            r += h[i] * v[i]
        if r > 1.0:
            r = 1.0
        total += prod * r
    return total


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov scan for continuous power-law tails
#
# For each candidate cut position c into the ascending sample z, the tail
# z[c:] is fitted by maximum likelihood (alpha = 1 + m / sum log(x/xmin))
# and the two-sided KS distance between the tail's empirical CDF and the
# fitted CDF is computed.  Candidates whose tail log-sum vanishes (all tail
# values equal) get alpha = inf and KS = inf so the scan skips them.
# ---------------------------------------------------------------------------


def ks_scan_numpy(z: np.ndarray, cand: np.ndarray):
    n = z.shape[0]
    logz = np.log(z)
    suffix = np.concatenate([np.cumsum(logz[::-1])[::-1], [0.0]])
    alphas = np.full(cand.shape[0], np.inf)
    ds = np.full(cand.shape[0], np.inf)
    for c_i, c in enumerate(cand):
        m = n - c
        xmin = z[c]
        logsum = suffix[c] - m * logz[c]
        if logsum <= 0.0:
            continue
        alpha = 1.0 + m / logsum
        tail = z[c:]
        model = 1.0 - (xmin / tail) ** (alpha - 1.0)
        hi = np.arange(1, m + 1) / m
        lo = np.arange(0, m) / m
        ds[c_i] = max(np.abs(hi - model).max(), np.abs(lo - model).max())
        alphas[c_i] = alpha
    return alphas, ds


def _ks_scan_src(z, cand):
    n = z.shape[0]
    logz = np.log(z)
    suffix = np.zeros(n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + logz[i]
    alphas = np.full(cand.shape[0], np.inf)
    ds = np.full(cand.shape[0], np.inf)
    for c_i in range(cand.shape[0]):
        c = cand[c_i]
        m = n - c
        xmin = z[c]
        logsum = suffix[c] - m * logz[c]
        if logsum <= 0.0:
            continue
        alpha = 1.0 + m / logsum
        d = 0.0
        for k in range(m):
            model = 1.0 - (xmin / z[c + k]) ** (alpha - 1.0)
            d_hi = abs((k + 1.0) / m - model)
            d_lo = abs(k / m - model)
            if d_hi > d:
                d = d_hi
            if d_lo > d:
                d = d_lo
        ds[c_i] = d
        alphas[c_i] = alpha
    return alphas, ds


if USING_NUMBA:
    _cascade_jit = njit(cache=True, nogil=True)(_cascade_src)
    cascade_numba = _cascade_jit
    seed_sweep_numba = njit(cache=True, nogil=True)(_seed_sweep_src)
    exact_powerset_sum_numba = njit(cache=True, nogil=True)(_exact_powerset_sum_src)
    ks_scan_numba = njit(cache=True, nogil=True)(_ks_scan_src)
    cascade = cascade_numba
    seed_sweep = seed_sweep_numba
    exact_powerset_sum = exact_powerset_sum_numba
    ks_scan = ks_scan_numba
else:
    cascade_numba = None
    seed_sweep_numba = None
    exact_powerset_sum_numba = None
    ks_scan_numba = None
    cascade = cascade_numpy
    seed_sweep = seed_sweep_numpy
    exact_powerset_sum = exact_powerset_sum_numpy
    ks_scan = ks_scan_numpy
