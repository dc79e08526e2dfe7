# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: CNN-BiGRU forward pass, CART split search, tree routing.

Signatures and semantics match ``cloudeff._pykernels``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double LOGIT_CLIP = 30.0
cdef double SPLIT_TIE_RTOL = 1e-10


cdef inline double _sigmoid(double a) noexcept nogil:
    return 1.0 / (1.0 + exp(-a))


cdef inline double _tanh(double a) noexcept nogil:
    # glibc exp is several times faster than tanh; absolute error stays ~1e-16
    return 1.0 - 2.0 / (exp(2.0 * a) + 1.0)


cdef void _gru_run(const double* P, Py_ssize_t off, const double* seq, int T, int F, int H,
                   bint reverse, double* h, double* zr, double* rh) noexcept nogil:
    # seq is (T, F) row-major; zr holds z in [0, H) and r in [H, 2H)
    cdef Py_ssize_t block = H * F + H * H + H
    cdef const double* W
    cdef const double* U
    cdef const double* b
    cdef const double* x
    cdef int t, step, g, i, j
    cdef double acc, cand
    for i in range(H):
        h[i] = 0.0
    for step in range(T):
        t = T - 1 - step if reverse else step
        x = seq + t * F
        for g in range(2):
            W = P + off + g * block
            U = W + H * F
            b = U + H * H
            for i in range(H):
                acc = b[i]
                for j in range(F):
                    acc += W[i * F + j] * x[j]
                for j in range(H):
                    acc += U[i * H + j] * h[j]
                zr[g * H + i] = _sigmoid(acc)
        for i in range(H):
            rh[i] = zr[H + i] * h[i]
        W = P + off + 2 * block
        U = W + H * F
        b = U + H * H
        # candidate values are parked in zr[H:2H] once r has been consumed
        for i in range(H):
            acc = b[i]
            for j in range(F):
                acc += W[i * F + j] * x[j]
            for j in range(H):
                acc += U[i * H + j] * rh[j]
            zr[H + i] = _tanh(acc)
        for i in range(H):
            cand = zr[H + i]
            h[i] = (1.0 - zr[i]) * h[i] + zr[i] * cand


cdef double _forward_one(const double* P, const double* xin, int p, int F, int k, int H,
                         bint same, double* conv, double* hf, double* hb,
                         double* zr, double* rh) noexcept nogil:
    cdef int left = (k - 1) // 2 if same else 0
    cdef int T = p if same else p - k + 1
    cdef int t, f, j, src
    cdef double acc, logit
    cdef const double* w
    for t in range(T):
        for f in range(F):
            w = P + f * k
            acc = P[F * k + f]
            for j in range(k):
                src = t + j - left
                if 0 <= src < p:
                    acc += w[j] * xin[src]
            conv[t * F + f] = _tanh(acc)
    cdef Py_ssize_t off = F * k + F
    cdef Py_ssize_t gru_size = 3 * (H * F + H * H + H)
    _gru_run(P, off, conv, T, F, H, False, hf, zr, rh)
    _gru_run(P, off + gru_size, conv, T, F, H, True, hb, zr, rh)
    cdef Py_ssize_t head = off + 2 * gru_size
    logit = P[head + 2 * H]
    for j in range(H):
        logit += P[head + j] * hf[j]
    for j in range(H):
        logit += P[head + H + j] * hb[j]
    if logit > LOGIT_CLIP:
        logit = LOGIT_CLIP
    elif logit < -LOGIT_CLIP:
        logit = -LOGIT_CLIP
    return _sigmoid(logit)


cdef void _forward_batch(const double[::1] params, const double[:, ::1] X, int p, int F, int k,
                         int H, bint same, double[::1] out):
    cdef Py_ssize_t n = X.shape[0], s
    cdef double* buf = <double*>malloc((p * F + 4 * H + 2 * H) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* conv = buf
    cdef double* hf = conv + p * F
    cdef double* hb = hf + H
    cdef double* zr = hb + H
    cdef double* rh = zr + 2 * H
    try:
        with nogil:
            for s in range(n):
                out[s] = _forward_one(&params[0], &X[s, 0], p, F, k, H, same, conv, hf, hb, zr, rh)
    finally:
        free(buf)


def net_predict(params, X, int p, int F, int k, int H, bint same):
    cdef const double[::1] P = np.ascontiguousarray(params, dtype=np.float64)
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    out = np.empty(Xv.shape[0], dtype=np.float64)
    if Xv.shape[0]:
        _forward_batch(P, Xv, p, F, k, H, same, out)
    return out


def net_mse(params, X, y, int p, int F, int k, int H, bint same):
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] pred = net_predict(params, X, p, F, k, H, same)
    cdef Py_ssize_t i, n = yv.shape[0]
    cdef double acc = 0.0, d
    for i in range(n):
        d = pred[i] - yv[i]
        acc += d * d
    return acc / n


def best_split(X, y, features, Py_ssize_t min_leaf):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0]
    if n < 2 * min_leaf or n < 2:
        return -1, 0.0, 0.0
    cdef Py_ssize_t i, f, pos, lo_pos = min_leaf - 1, hi_pos = n - min_leaf
    cdef bint constant = True
    for i in range(1, n):
        if yv[i] != yv[0]:
            constant = False
            break
    if constant:
        # centring leaves rounding residue that would otherwise look splittable
        return -1, 0.0, 0.0
    cdef double mean = 0.0
    for i in range(n):
        mean += yv[i]
    mean /= n
    yc_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] yc = yc_arr
    cdef double parent = 0.0
    for i in range(n):
        yc[i] = yv[i] - mean
        parent += yc[i] * yc[i]
    cdef double tol = SPLIT_TIE_RTOL * parent
    cdef double best_sse = INFINITY, best_thr = 0.0
    cdef Py_ssize_t best_f = -1
    cdef double sl, ql, st, qt, nl, nr, sr, qr, sse, feat_sse, feat_thr, a, b, thr
    cdef Py_ssize_t[::1] order
    xs_arr = np.empty(n, dtype=np.float64)
    ys_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] xs = xs_arr
    cdef double[::1] ys = ys_arr
    for fobj in features:
        f = fobj
        order = np.argsort(np.asarray(Xv[:, f]), kind="stable").astype(np.intp)
        st = 0.0
        qt = 0.0
        for i in range(n):
            xs[i] = Xv[order[i], f]
            ys[i] = yc[order[i]]
            st += ys[i]
            qt += ys[i] * ys[i]
        sl = 0.0
        ql = 0.0
        feat_sse = INFINITY
        feat_thr = 0.0
        for pos in range(hi_pos):
            sl += ys[pos]
            ql += ys[pos] * ys[pos]
            if pos < lo_pos or not xs[pos] < xs[pos + 1]:
                continue
            nl = pos + 1
            nr = n - nl
            sr = st - sl
            qr = qt - ql
            sse = (ql - sl * sl / nl) + (qr - sr * sr / nr)
            if sse < feat_sse:
                feat_sse = sse
                a = xs[pos]
                b = xs[pos + 1]
                thr = 0.5 * (a + b)
                feat_thr = thr if thr < b else a
        if feat_sse < best_sse - tol:
            best_sse = feat_sse
            best_f = f
            best_thr = feat_thr
    if best_f < 0 or not parent - best_sse > tol:
        return -1, 0.0, 0.0
    return best_f, best_thr, parent - best_sse


def tree_apply(feature, threshold, left, right, value, X):
    cdef const Py_ssize_t[::1] fv = np.ascontiguousarray(feature, dtype=np.intp)
    cdef const double[::1] tv = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef const Py_ssize_t[::1] lv = np.ascontiguousarray(left, dtype=np.intp)
    cdef const Py_ssize_t[::1] rv = np.ascontiguousarray(right, dtype=np.intp)
    cdef const double[::1] vv = np.ascontiguousarray(value, dtype=np.float64)
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    out_arr = np.empty(Xv.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t s, node
    with nogil:
        for s in range(Xv.shape[0]):
            node = 0
            while fv[node] >= 0:
                if Xv[s, fv[node]] <= tv[node]:
                    node = lv[node]
                else:
                    node = rv[node]
            out[s] = vv[node]
    return out_arr
