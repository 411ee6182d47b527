# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: word-tree accumulation and the Monte Carlo forward pass.

Contracts match entrate._kernels_py exactly; see that module for the
reference semantics.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport log

cnp.import_array()

cdef long long ORD_INF_C = 1073741824  # 1 << 30

ORD_INF = ORD_INF_C


cdef void _rec_decomp(int depth, int n, int nz, int m,
                      double[:, ::1] U, long long[:, ::1] T,
                      double[:, :, ::1] num, long long[:, :, ::1] ords,
                      bint use_orders, double log_eps,
                      double* H, double* F, double* G):
    cdef int i, j, z
    cdef double p_hist = 0.0, p_word, cond, acc, kk
    cdef long long o_hist, o_word, t_acc, v
    for i in range(m):
        p_hist += U[depth, i]
    if p_hist == 0.0:
        return
    if depth == n:
        o_hist = ORD_INF_C
        if use_orders:
            for i in range(m):
                if T[depth, i] < o_hist:
                    o_hist = T[depth, i]
        for z in range(nz):
            p_word = 0.0
            for j in range(m):
                acc = 0.0
                for i in range(m):
                    acc += U[depth, i] * num[z, i, j]
                p_word += acc
            if p_word <= 0.0:
                continue
            cond = p_word / p_hist
            H[0] -= p_word * log(cond)
            if use_orders:
                o_word = ORD_INF_C
                for j in range(m):
                    t_acc = ORD_INF_C
                    for i in range(m):
                        v = T[depth, i] + ords[z, i, j]
                        if v < t_acc:
                            t_acc = v
                    if t_acc < o_word:
                        o_word = t_acc
                kk = <double> (o_word - o_hist)
                F[0] -= kk * p_word
                G[0] -= p_word * (log(cond) - kk * log_eps)
        return
    for z in range(nz):
        for j in range(m):
            acc = 0.0
            for i in range(m):
                acc += U[depth, i] * num[z, i, j]
            U[depth + 1, j] = acc
            if use_orders:
                t_acc = ORD_INF_C
                for i in range(m):
                    v = T[depth, i] + ords[z, i, j]
                    if v < t_acc:
                        t_acc = v
                T[depth + 1, j] = t_acc if t_acc < ORD_INF_C else ORD_INF_C
        _rec_decomp(depth + 1, n, nz, m, U, T, num, ords, use_orders, log_eps, H, F, G)


def decomp_sums(pi, num, ords, int n, double log_eps, bint use_orders):
    cdef cnp.ndarray[cnp.float64_t, ndim=3] num_a = np.ascontiguousarray(num, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=3] ord_a = np.ascontiguousarray(ords, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pi_a = np.ascontiguousarray(pi, dtype=np.float64)
    cdef int nz = num_a.shape[0]
    cdef int m = num_a.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Ubuf = np.zeros((n + 2, m))
    cdef cnp.ndarray[cnp.int64_t, ndim=2] Tbuf = np.zeros((n + 2, m), dtype=np.int64)
    cdef double[:, ::1] U = Ubuf
    cdef long long[:, ::1] T = Tbuf
    cdef int i
    for i in range(m):
        U[0, i] = pi_a[i]
        T[0, i] = 0 if pi_a[i] > 0 else ORD_INF_C
    cdef double H = 0.0, F = 0.0, G = 0.0
    _rec_decomp(0, n, nz, m, U, T, num_a, ord_a, use_orders, log_eps, &H, &F, &G)
    if not use_orders:
        return H, 0.0, H
    return H, F, G


cdef void _rec_stats(int depth, int n, int nz, int m,
                     double[:, ::1] U, long long[:, ::1] T,
                     double[:, :, ::1] num, long long[:, :, ::1] ords,
                     long long[::1] out_orders, double[::1] out_probs,
                     long long* cursor):
    cdef int i, j, z
    cdef double p, acc
    cdef long long o, t_acc, v
    if depth == n:
        p = 0.0
        o = ORD_INF_C
        for i in range(m):
            p += U[depth, i]
            if T[depth, i] < o:
                o = T[depth, i]
        out_probs[cursor[0]] = p
        out_orders[cursor[0]] = o
        cursor[0] += 1
        return
    for z in range(nz):
        for j in range(m):
            acc = 0.0
            t_acc = ORD_INF_C
            for i in range(m):
                acc += U[depth, i] * num[z, i, j]
                v = T[depth, i] + ords[z, i, j]
                if v < t_acc:
                    t_acc = v
            U[depth + 1, j] = acc
            T[depth + 1, j] = t_acc if t_acc < ORD_INF_C else ORD_INF_C
        _rec_stats(depth + 1, n, nz, m, U, T, num, ords, out_orders, out_probs, cursor)


def word_stats(pi, num, ords, int n):
    cdef cnp.ndarray[cnp.float64_t, ndim=3] num_a = np.ascontiguousarray(num, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=3] ord_a = np.ascontiguousarray(ords, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pi_a = np.ascontiguousarray(pi, dtype=np.float64)
    cdef int nz = num_a.shape[0]
    cdef int m = num_a.shape[1]
    cdef long long total = 1
    cdef int d
    for d in range(n):
        total *= nz
    cdef cnp.ndarray[cnp.int64_t, ndim=1] orders = np.empty(total, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] probs = np.empty(total, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Ubuf = np.zeros((n + 2, m))
    cdef cnp.ndarray[cnp.int64_t, ndim=2] Tbuf = np.zeros((n + 2, m), dtype=np.int64)
    cdef double[:, ::1] U = Ubuf
    cdef long long[:, ::1] T = Tbuf
    cdef int i
    for i in range(m):
        U[0, i] = pi_a[i]
        T[0, i] = 0 if pi_a[i] > 0 else ORD_INF_C
    cdef long long cursor = 0
    _rec_stats(0, n, nz, m, U, T, num_a, ord_a, orders, probs, &cursor)
    return orders, probs


cdef inline int _draw(double[::1] cum, int size, double u):
    cdef int j = 0
    while j < size - 1 and u >= cum[j]:
        j += 1
    return j


def mc_block(u, cum_init_x, cum_rows_x, cum_state, cum_out, pi_joint, num, ords):
    cdef cnp.ndarray[cnp.float64_t, ndim=3] u_a = np.ascontiguousarray(u, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cix = np.ascontiguousarray(cum_init_x, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] crx = np.ascontiguousarray(cum_rows_x, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cst = np.ascontiguousarray(cum_state, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] cout = np.ascontiguousarray(cum_out, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pij = np.ascontiguousarray(pi_joint, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] num_a = np.ascontiguousarray(num, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=3] ord_a = np.ascontiguousarray(ords, dtype=np.int64)

    cdef int B = u_a.shape[0]
    cdef int steps = u_a.shape[1]
    cdef int n = steps - 1
    cdef int mx = crx.shape[0]
    cdef int mc = cst.shape[0]
    cdef int nz = num_a.shape[0]
    cdef int m = num_a.shape[1]

    cdef cnp.ndarray[cnp.float64_t, ndim=1] h = np.empty(B)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] f = np.empty(B)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] zbuf = np.empty(steps, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] wbuf = np.empty(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vbuf = np.empty(m)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] tbuf = np.empty(m, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] t2buf = np.empty(m, dtype=np.int64)
    cdef long long[::1] zs = zbuf
    cdef double[::1] w = wbuf
    cdef double[::1] v = vbuf
    cdef long long[::1] t = tbuf
    cdef long long[::1] t2 = t2buf

    cdef int s, i, j, k, x, c, z
    cdef double ssum, cond, acc
    cdef long long o_hist, o_word, t_acc, tv

    for s in range(B):
        x = _draw(cix, mx, u_a[s, 0, 0])
        for i in range(steps):
            if i > 0:
                x = _draw(crx[x], mx, u_a[s, i, 0])
            c = _draw(cst, mc, u_a[s, i, 1])
            zs[i] = _draw(cout[x, c], nz, u_a[s, i, 2])
        for j in range(m):
            w[j] = pij[j]
            t[j] = 0 if pij[j] > 0 else ORD_INF_C
        for i in range(n):
            z = zs[i]
            ssum = 0.0
            for j in range(m):
                acc = 0.0
                t_acc = ORD_INF_C
                for k in range(m):
                    acc += w[k] * num_a[z, k, j]
                    tv = t[k] + ord_a[z, k, j]
                    if tv < t_acc:
                        t_acc = tv
                v[j] = acc
                t2[j] = t_acc if t_acc < ORD_INF_C else ORD_INF_C
                ssum += acc
            for j in range(m):
                w[j] = v[j] / ssum
                t[j] = t2[j]
        o_hist = ORD_INF_C
        for j in range(m):
            if t[j] < o_hist:
                o_hist = t[j]
        z = zs[n]
        cond = 0.0
        o_word = ORD_INF_C
        for j in range(m):
            acc = 0.0
            t_acc = ORD_INF_C
            for k in range(m):
                acc += w[k] * num_a[z, k, j]
                tv = t[k] + ord_a[z, k, j]
                if tv < t_acc:
                    t_acc = tv
            cond += acc
            if t_acc < o_word:
                o_word = t_acc
        h[s] = -log(cond)
        f[s] = -<double> (o_word - o_hist)
    return h, f
