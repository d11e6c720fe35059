"""Compiled inner loops. Everything here takes pre-drawn uniforms so that the
random stream stays owned by numpy and results do not depend on numba."""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def chain_path(cdf, start, u):
    """Run a finite Markov chain from ``start`` using inverse-CDF lookups.

    ``cdf[i]`` is the cumulative row ``i`` (last entry forced to 1). Returns
    the ``len(u)`` states visited after ``start``.
    """
    n = u.shape[0]
    k = cdf.shape[1]
    out = np.empty(n, np.int64)
    s = start
    for j in range(n):
        x = u[j]
        row = cdf[s]
        nxt = k - 1
        for m in range(k):
            if x < row[m]:
                nxt = m
                break
        out[j] = nxt
        s = nxt
    return out


@njit(cache=True, nogil=True)
def split_chain_path(base_cdf, resid_cdf, p_regen, start, u_coin, u_draw):
    """Split-chain run: with probability ``p_regen`` the next state is drawn
    from the base measure (a regeneration), otherwise from the residual row.

    ``flags[j]`` marks that the transition *into* ``states[j]`` regenerated.
    """
    n = u_coin.shape[0]
    k = base_cdf.shape[0]
    states = np.empty(n, np.int64)
    flags = np.zeros(n, np.bool_)
    s = start
    for j in range(n):
        x = u_draw[j]
        if u_coin[j] < p_regen:
            row = base_cdf
            flags[j] = True
        else:
            row = resid_cdf[s]
        nxt = k - 1
        for m in range(k):
            if x < row[m]:
                nxt = m
                break
        states[j] = nxt
        s = nxt
    return states, flags


@njit(cache=True, nogil=True)
def kahan_cumsum(x, start):
    """Compensated running sum; ``out[0] = start``, ``out[i+1] = start + x[:i+1].sum()``."""
    n = x.shape[0]
    out = np.empty(n + 1, np.float64)
    s = start
    c = 0.0
    out[0] = s
    for i in range(n):
        y = x[i] - c
        t = s + y
        c = (t - s) - y
        s = t
        out[i + 1] = s
    return out


@njit(cache=True, nogil=True)
def leg_prefix(vectors, states, durations):
    """Compensated prefix sums of ``durations[i] * vectors[states[i]]``.

    Row ``k`` holds the sum of the first ``k`` legs, so row 0 is zero.
    """
    n = states.shape[0]
    d = vectors.shape[1]
    out = np.zeros((n + 1, d), np.float64)
    for c in range(d):
        s = 0.0
        comp = 0.0
        for i in range(n):
            y = durations[i] * vectors[states[i], c] - comp
            t = s + y
            comp = (t - s) - y
            s = t
            out[i + 1, c] = s
    return out


@njit(cache=True, nogil=True)
def cycle_sums(vectors, states, durations, ends):
    """Displacement and elapsed time of consecutive step blocks.

    Block ``i`` covers 0-based steps ``ends[i-1]+1 .. ends[i]`` (with
    ``ends[-1] := -1``).
    """
    m = ends.shape[0]
    d = vectors.shape[1]
    xi = np.zeros((m, d), np.float64)
    r = np.zeros(m, np.float64)
    lo = 0
    for i in range(m):
        hi = ends[i]
        for j in range(lo, hi + 1):
            t = durations[j]
            r[i] += t
            for c in range(d):
                xi[i, c] += t * vectors[states[j], c]
        lo = hi + 1
    return xi, r
