# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled SCL kernel.

Batched LLR-domain SCL decoding with exact (softplus) path metrics and the
pruned-subtree mass accumulator. Mirrors :mod:`polargd._sclpy` exactly.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log1p, exp, fabs, INFINITY, log
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

cnp.import_array()

cdef double LN2 = 0.6931471805599453


cdef inline double softplus(double x) noexcept nogil:
    if x > 0.0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef inline double logaddexp(double a, double b) noexcept nogil:
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a > b:
        return a + log1p(exp(b - a))
    return b + log1p(exp(a - b))


cdef inline double check_node(double a, double b) noexcept nogil:
    # m + log1p(e^-(2m+d)) - log1p(e^-d), m = min(|a|,|b|), d = ||a|-|b||;
    # terms below e^-37 vanish against 1 in double precision
    cdef double aa = fabs(a), bb = fabs(b)
    cdef double m, d, ed, r
    if aa < bb:
        m = aa
        d = bb - aa
    else:
        m = bb
        d = aa - bb
    if d > 37.0:
        r = m
    else:
        ed = exp(-d)
        if 2.0 * m > 37.0:
            r = m - log1p(ed)
        else:
            r = m + log((1.0 + ed * exp(-2.0 * m)) / (1.0 + ed))
    if (a < 0.0) != (b < 0.0):
        return -r
    return r


cpdef double check_combine(double a, double b):
    return check_node(a, b)


cpdef double pm_step(double pm, double lam, int u):
    if u:
        return pm + softplus(lam)
    return pm + softplus(-lam)


cdef inline int ctz(int x) noexcept nogil:
    cdef int c = 0
    while (x & 1) == 0:
        x >>= 1
        c += 1
    return c


cdef struct Workspace:
    int N
    int n
    int L
    double *llr      # L slots x (N - 1) layer values
    unsigned char *ps   # L slots x (N - 1) partial sums
    unsigned char *u    # L slots x N decided bits
    double *pm
    int *active
    int n_active
    int *free_slots
    int n_free
    # child bookkeeping, 2L entries
    double *cpm
    int *cpar
    int *cbit
    int *order
    int *kept
    unsigned char *tmp


cdef int ws_alloc(Workspace *w, int N, int n, int L) noexcept nogil:
    w.N = N
    w.n = n
    w.L = L
    w.llr = <double *> malloc(sizeof(double) * L * N)
    w.ps = <unsigned char *> malloc(L * N)
    w.u = <unsigned char *> malloc(L * N)
    w.pm = <double *> malloc(sizeof(double) * L)
    w.active = <int *> malloc(sizeof(int) * L)
    w.free_slots = <int *> malloc(sizeof(int) * L)
    w.cpm = <double *> malloc(sizeof(double) * 2 * L)
    w.cpar = <int *> malloc(sizeof(int) * 2 * L)
    w.cbit = <int *> malloc(sizeof(int) * 2 * L)
    w.order = <int *> malloc(sizeof(int) * 2 * L)
    w.kept = <int *> malloc(sizeof(int) * L)
    w.tmp = <unsigned char *> malloc(N)
    if (w.llr == NULL or w.ps == NULL or w.u == NULL or w.pm == NULL or w.active == NULL
            or w.free_slots == NULL or w.cpm == NULL or w.cpar == NULL or w.cbit == NULL
            or w.order == NULL or w.kept == NULL or w.tmp == NULL):
        return -1
    return 0


cdef void ws_free(Workspace *w) noexcept nogil:
    free(w.llr); free(w.ps); free(w.u); free(w.pm); free(w.active)
    free(w.free_slots); free(w.cpm); free(w.cpar); free(w.cbit)
    free(w.order); free(w.kept); free(w.tmp)


cdef inline int prefix_less(Workspace *w, int pa, int ba, int pb, int bb, int i) noexcept nogil:
    """Lexicographic order of u-prefixes (u_0..u_{i-1}, bit) of two children."""
    cdef unsigned char *ua = w.u + pa * w.N
    cdef unsigned char *ub = w.u + pb * w.N
    cdef int j
    if pa != pb:
        for j in range(i):
            if ua[j] != ub[j]:
                return ua[j] < ub[j]
    return ba < bb


cdef inline int child_less(Workspace *w, int x, int y, int i) noexcept nogil:
    if w.cpm[x] != w.cpm[y]:
        return w.cpm[x] < w.cpm[y]
    return prefix_less(w, w.cpar[x], w.cbit[x], w.cpar[y], w.cbit[y], i)


cdef inline int path_less(Workspace *w, int p, int q) noexcept nogil:
    if w.pm[p] != w.pm[q]:
        return w.pm[p] < w.pm[q]
    return prefix_less(w, p, 0, q, 0, w.N)


cdef void compute_llr(Workspace *w, int p, int i, const double *chan) noexcept nogil:
    cdef int n = w.n
    cdef int start = n if i == 0 else ctz(i) + 1
    cdef double *base = w.llr + p * w.N
    cdef unsigned char *psb = w.ps + p * w.N
    cdef int s, j, half
    cdef const double *src
    cdef double *dst
    cdef unsigned char *left
    s = start
    while s >= 1:
        half = 1 << (s - 1)
        if s == n:
            src = chan
        else:
            src = base + ((1 << s) - 1)
        dst = base + (half - 1)
        if (i >> (s - 1)) & 1:
            left = psb + (half - 1)
            for j in range(half):
                if left[j]:
                    dst[j] = src[j + half] - src[j]
                else:
                    dst[j] = src[j + half] + src[j]
        else:
            for j in range(half):
                dst[j] = check_node(src[j], src[j + half])
        s -= 1


cdef void update_partial_sums(Workspace *w, int p, int i, unsigned char bit) noexcept nogil:
    cdef unsigned char *psb = w.ps + p * w.N
    cdef unsigned char *t = w.tmp
    cdef unsigned char *left
    cdef int s = 0, length = 1, j
    t[0] = bit
    while s < w.n and ((i >> s) & 1):
        left = psb + (length - 1)
        for j in range(length):
            t[length + j] = t[j]
            t[j] = t[j] ^ left[j]
        length <<= 1
        s += 1
    if s < w.n:
        memcpy(psb + (length - 1), t, length)


cdef inline void copy_path(Workspace *w, int dst, int src) noexcept nogil:
    memcpy(w.llr + dst * w.N, w.llr + src * w.N, sizeof(double) * (w.N - 1))
    memcpy(w.ps + dst * w.N, w.ps + src * w.N, w.N - 1)
    memcpy(w.u + dst * w.N, w.u + src * w.N, w.N)
    w.pm[dst] = w.pm[src]


cdef double decode_frame(Workspace *w, const double *chan, const unsigned char *frozen,
                         const int *rule_ptr, const int *rule_idx, const int *ffc) noexcept nogil:
    cdef int N = w.N, L = w.L
    cdef int i, a, p, q, k, c, nc, x, y, pos, bit
    cdef double lam, acc = -INFINITY
    cdef unsigned char ub, *up

    w.active[0] = 0
    w.n_active = 1
    w.pm[0] = 0.0
    w.n_free = 0
    for p in range(L - 1, 0, -1):
        w.free_slots[w.n_free] = p
        w.n_free += 1

    for i in range(N):
        for a in range(w.n_active):
            compute_llr(w, w.active[a], i, chan)

        if frozen[i]:
            for a in range(w.n_active):
                p = w.active[a]
                up = w.u + p * N
                ub = 0
                for k in range(rule_ptr[i], rule_ptr[i + 1]):
                    ub ^= up[rule_idx[k]]
                lam = w.llr[p * N]
                w.pm[p] += softplus(lam) if ub else softplus(-lam)
                up[i] = ub
                update_partial_sums(w, p, i, ub)
            continue

        nc = 2 * w.n_active
        for a in range(w.n_active):
            p = w.active[a]
            lam = w.llr[p * N]
            w.cpm[2 * a] = w.pm[p] + softplus(-lam)
            w.cpar[2 * a] = p
            w.cbit[2 * a] = 0
            w.cpm[2 * a + 1] = w.pm[p] + softplus(lam)
            w.cpar[2 * a + 1] = p
            w.cbit[2 * a + 1] = 1
            w.order[2 * a] = 2 * a
            w.order[2 * a + 1] = 2 * a + 1

        if nc > L:
            # insertion sort of children, nc <= 2L
            for x in range(1, nc):
                y = w.order[x]
                pos = x
                while pos > 0 and child_less(w, y, w.order[pos - 1], i):
                    w.order[pos] = w.order[pos - 1]
                    pos -= 1
                w.order[pos] = y
            for x in range(L, nc):
                y = w.order[x]
                acc = logaddexp(acc, -w.cpm[y] - ffc[i] * LN2)
            for a in range(w.n_active):
                w.kept[a] = 0
            for x in range(L):
                y = w.order[x]
                w.kept[y >> 1] |= 1 << w.cbit[y]
        else:
            for a in range(w.n_active):
                w.kept[a] = 3

        # release parents without surviving children first
        c = 0
        for a in range(w.n_active):
            if w.kept[a] == 0:
                w.free_slots[w.n_free] = w.active[a]
                w.n_free += 1
        k = w.n_active
        for a in range(k):
            p = w.active[a]
            if w.kept[a] == 0:
                continue
            if w.kept[a] == 3:
                w.n_free -= 1
                q = w.free_slots[w.n_free]
                copy_path(w, q, p)
                w.u[p * N + i] = 0
                w.pm[p] = w.cpm[2 * a]
                w.u[q * N + i] = 1
                w.pm[q] = w.cpm[2 * a + 1]
                update_partial_sums(w, p, i, 0)
                update_partial_sums(w, q, i, 1)
                w.order[c] = p
                w.order[c + 1] = q
                c += 2
            else:
                bit = 0 if w.kept[a] == 1 else 1
                w.u[p * N + i] = bit
                w.pm[p] = w.cpm[2 * a + bit]
                update_partial_sums(w, p, i, bit)
                w.order[c] = p
                c += 1
        for a in range(c):
            w.active[a] = w.order[a]
        w.n_active = c

    # survivors sorted by (pm, u) ascending
    for x in range(1, w.n_active):
        y = w.active[x]
        pos = x
        while pos > 0 and path_less(w, y, w.active[pos - 1]):
            w.active[pos] = w.active[pos - 1]
            pos -= 1
        w.active[pos] = y
    for a in range(w.n_active):
        acc = logaddexp(acc, -w.pm[w.active[a]])
    return acc


def decode_batch(double[:, ::1] llr, unsigned char[::1] frozen, int[::1] rule_ptr,
                 int[::1] rule_idx, int[::1] ffc, int L):
    """Decode a batch of frames.

    Returns ``(u, pm, log_q_star, n_cand)`` with shapes (B, L, N), (B, L),
    (B,), (B,). Unused candidate slots carry ``pm = inf``.
    """
    cdef Py_ssize_t B = llr.shape[0]
    cdef int N = llr.shape[1]
    cdef int n = 0
    while (1 << n) < N:
        n += 1
    if (1 << n) != N or N < 2:
        raise ValueError("frame length must be a power of two >= 2")
    if L < 1:
        raise ValueError("list size must be >= 1")
    if frozen.shape[0] != N or ffc.shape[0] < N or rule_ptr.shape[0] != N + 1:
        raise ValueError("code description does not match frame length")

    u_out = np.zeros((B, L, N), dtype=np.uint8)
    pm_out = np.full((B, L), np.inf)
    logq_out = np.empty(B)
    nc_out = np.empty(B, dtype=np.int32)
    cdef unsigned char[:, :, ::1] uv = u_out
    cdef double[:, ::1] pmv = pm_out
    cdef double[::1] lqv = logq_out
    cdef int[::1] ncv = nc_out
    cdef const int *ridx = &rule_idx[0] if rule_idx.shape[0] > 0 else NULL

    cdef Workspace w
    if ws_alloc(&w, N, n, L) != 0:
        ws_free(&w)
        raise MemoryError()
    cdef Py_ssize_t b
    cdef int a, p
    try:
        with nogil:
            for b in range(B):
                lqv[b] = decode_frame(&w, &llr[b, 0], &frozen[0], &rule_ptr[0], ridx, &ffc[0])
                ncv[b] = w.n_active
                for a in range(w.n_active):
                    p = w.active[a]
                    pmv[b, a] = w.pm[p]
                    memcpy(&uv[b, a, 0], w.u + p * N, N)
    finally:
        ws_free(&w)
    return u_out, pm_out, logq_out, nc_out
