"""Numpy fallback for the hot kernels.

Same contracts as the compiled extension ``entrate._kernels``: exhaustive
accumulation of the entropy decomposition over all output words, per-word
order/probability tables, and the Monte Carlo forward pass.  Enumeration is
chunked over leading symbols so memory stays bounded at large depth; chunks
are emitted in lexicographic word order, matching the compiled kernel.
"""

from __future__ import annotations

import numpy as np

ORD_INF = 1 << 30

_CHUNK_PATHS = 1 << 14


def _minplus_rows(t: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Min-plus product of row vectors (paths, m) with an order matrix (m, m)."""
    return np.minimum(np.min(t[:, :, None] + m[None, :, :], axis=1), ORD_INF)


def _history_blocks(pi, t0, num, ords, n, track_orders):
    nz, m, _ = num.shape
    g = 0
    while nz ** (n - g) > _CHUNK_PATHS:
        g += 1

    def expand(u, t, depth):
        U = u[None, :]
        T = t[None, :] if track_orders else None
        for _ in range(depth):
            U = np.einsum("pm,zmj->pzj", U, num).reshape(-1, m)
            if track_orders:
                T = np.stack([_minplus_rows(T, ords[z]) for z in range(nz)], axis=1).reshape(-1, m)
        return U, T

    def rec(u, t, done):
        if done == g:
            yield expand(u, t, n - g)
            return
        for z in range(nz):
            u2 = u @ num[z]
            t2 = np.minimum(np.min(t[:, None] + ords[z], axis=0), ORD_INF) if track_orders else t
            yield from rec(u2, t2, done + 1)

    yield from rec(np.asarray(pi, dtype=float), t0, 0)


def decomp_sums(pi, num, ords, n, log_eps, use_orders):
    """Accumulate (H, F, G) over every output word of length n+1.

    H sums -p(word) log p(last|history); F sums -ord(conditional) p(word);
    G sums -p(word) (log cond - ord * log_eps).  With use_orders False
    (the zero-noise path) F is 0 and G equals H.
    """
    num = np.asarray(num, dtype=float)
    nz, m, _ = num.shape
    pi = np.asarray(pi, dtype=float)
    t0 = np.where(pi > 0, 0, ORD_INF).astype(np.int64)
    H = F = G = 0.0
    for U, T in _history_blocks(pi, t0, num, ords, n, use_orders):
        p_hist = U.sum(axis=1)
        mask = p_hist > 0
        if not mask.any():
            continue
        Um, pm = U[mask], p_hist[mask]
        Tm = T[mask] if use_orders else None
        o_hist = Tm.min(axis=1) if use_orders else None
        for z in range(nz):
            V = Um @ num[z]
            p_word = V.sum(axis=1)
            wmask = p_word > 0
            if not wmask.any():
                continue
            pw = p_word[wmask]
            logc = np.log(pw / pm[wmask])
            H -= float(pw @ logc)
            if use_orders:
                o_word = _minplus_rows(Tm[wmask], ords[z]).min(axis=1)
                kk = (o_word - o_hist[wmask]).astype(float)
                F -= float(kk @ pw)
                G -= float(pw @ (logc - kk * log_eps))
    if not use_orders:
        return H, 0.0, H
    return H, F, G


def word_stats(pi, num, ords, n):
    """Exact order and probability of every length-n output word (lex order)."""
    num = np.asarray(num, dtype=float)
    nz = num.shape[0]
    pi = np.asarray(pi, dtype=float)
    t0 = np.where(pi > 0, 0, ORD_INF).astype(np.int64)
    total = nz**n
    orders = np.empty(total, dtype=np.int64)
    probs = np.empty(total, dtype=float)
    off = 0
    for U, T in _history_blocks(pi, t0, num, ords, n, True):
        b = U.shape[0]
        probs[off : off + b] = U.sum(axis=1)
        orders[off : off + b] = T.min(axis=1)
        off += b
    return orders, probs


def _draw_rows(cum_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = (cum_rows <= u[:, None]).sum(axis=1)
    return np.minimum(idx, cum_rows.shape[1] - 1)


def mc_block(u, cum_init_x, cum_rows_x, cum_state, cum_out, pi_joint, num, ords):
    """One block of the Monte Carlo estimator.

    u has shape (B, n+1, 3): per step, uniforms for the input symbol, the
    channel state and the output symbol.  Returns per-sample arrays
    (h, f) with h = -log p(last|history) and f = -ord of that conditional.
    """
    u = np.asarray(u, dtype=float)
    B, steps, _ = u.shape
    n = steps - 1
    num = np.asarray(num, dtype=float)
    n_states_c = cum_state.shape[0]

    x = np.minimum((cum_init_x <= u[:, 0, 0][:, None]).sum(axis=1), cum_init_x.shape[0] - 1)
    zs = np.empty((B, steps), dtype=np.int64)
    for i in range(steps):
        if i > 0:
            x = _draw_rows(cum_rows_x[x], u[:, i, 0])
        c = np.minimum((cum_state <= u[:, i, 1][:, None]).sum(axis=1), n_states_c - 1)
        zs[:, i] = _draw_rows(cum_out[x, c], u[:, i, 2])

    w = np.broadcast_to(pi_joint, (B, pi_joint.shape[0])).copy()
    t = np.broadcast_to(
        np.where(pi_joint > 0, 0, ORD_INF).astype(np.int64), w.shape
    ).copy()
    for i in range(n):
        mats = num[zs[:, i]]
        v = np.einsum("bm,bmj->bj", w, mats)
        s = v.sum(axis=1)
        w = v / s[:, None]
        t = np.minimum(np.min(t[:, :, None] + ords[zs[:, i]], axis=1), ORD_INF)
    o_hist = t.min(axis=1)
    v = np.einsum("bm,bmj->bj", w, num[zs[:, n]])
    cond = v.sum(axis=1)
    t2 = np.minimum(np.min(t[:, :, None] + ords[zs[:, n]], axis=1), ORD_INF)
    o_word = t2.min(axis=1)
    h = -np.log(cond)
    f = -(o_word - o_hist).astype(float)
    return h, f
