"""Pure numpy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` argument for argument and are used when the
compiled extension is unavailable or ``CLOUDEFF_KERNELS=python`` is set.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# Head pre-activation clip; keeps the sigmoid output strictly inside (0, 1).
LOGIT_CLIP = 30.0
# Relative margin a split must beat the incumbent by to replace it.
SPLIT_TIE_RTOL = 1e-10


def _sigmoid(a):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-a))


def _gru_run(P, off, seq, F, H):
    """Run one GRU direction over ``seq`` of shape (n, T, F); returns (n, H)."""
    block = H * F + H * H + H
    gates = []
    for g in range(3):
        base = off + g * block
        W = P[base:base + H * F].reshape(H, F)
        U = P[base + H * F:base + H * F + H * H].reshape(H, H)
        b = P[base + H * F + H * H:base + block]
        gates.append((W, U, b))
    (Wz, Uz, bz), (Wr, Ur, br), (Wn, Un, bn) = gates
    n = seq.shape[0]
    h = np.zeros((n, H))
    for t in range(seq.shape[1]):
        x = seq[:, t, :]
        z = _sigmoid(x @ Wz.T + h @ Uz.T + bz)
        r = _sigmoid(x @ Wr.T + h @ Ur.T + br)
        cand = np.tanh(x @ Wn.T + (r * h) @ Un.T + bn)
        h = (1.0 - z) * h + z * cand
    return h


def net_predict(params, X, p, F, k, H, same):
    P = np.asarray(params, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if same:
        left = (k - 1) // 2
        Xp = np.pad(X, ((0, 0), (left, k - 1 - left)))
    else:
        Xp = X
    windows = sliding_window_view(Xp, k, axis=1)  # (n, T, k)
    conv_w = P[:F * k].reshape(F, k)
    conv_b = P[F * k:F * k + F]
    seq = np.tanh(windows @ conv_w.T + conv_b)  # (n, T, F)

    gru_size = 3 * (H * F + H * H + H)
    off = F * k + F
    h_fwd = _gru_run(P, off, seq, F, H)
    h_bwd = _gru_run(P, off + gru_size, seq[:, ::-1, :], F, H)
    head = off + 2 * gru_size
    w_head = P[head:head + 2 * H]
    logit = h_fwd @ w_head[:H] + h_bwd @ w_head[H:] + P[head + 2 * H]
    return _sigmoid(np.clip(logit, -LOGIT_CLIP, LOGIT_CLIP))


def net_mse(params, X, y, p, F, k, H, same):
    pred = net_predict(params, X, p, F, k, H, same)
    diff = pred - np.asarray(y, dtype=np.float64)
    return float(np.mean(diff * diff))


def best_split(X, y, features, min_leaf):
    """Exhaustive SSE split search over ``features`` (ascending order).

    Returns ``(feature, threshold, sse_reduction)``; ``feature`` is -1 when no
    admissible split lowers the SSE.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if n < 2 * min_leaf or n < 2 or y.min() == y.max():
        # a constant target's centring residue must not look splittable
        return -1, 0.0, 0.0
    yc = y - y.sum() / n
    parent = float(np.cumsum(yc * yc)[-1])
    tol = SPLIT_TIE_RTOL * parent
    best_sse = np.inf
    best_f, best_thr = -1, 0.0
    positions = np.arange(min_leaf - 1, n - min_leaf)
    n_left = (positions + 1).astype(np.float64)
    n_right = n - n_left
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = yc[order]
        cs = np.cumsum(ys)
        cs2 = np.cumsum(ys * ys)
        valid = xs[positions] < xs[positions + 1]
        if not valid.any():
            continue
        sl = cs[positions]
        sr = cs[-1] - sl
        ql = cs2[positions]
        qr = cs2[-1] - ql
        sse = (ql - sl * sl / n_left) + (qr - sr * sr / n_right)
        sse = np.where(valid, sse, np.inf)
        i = int(np.argmin(sse))
        if sse[i] < best_sse - tol:
            best_sse = float(sse[i])
            best_f = int(f)
            lo, hi = xs[positions[i]], xs[positions[i] + 1]
            thr = 0.5 * (lo + hi)
            best_thr = float(thr if thr < hi else lo)
    if best_f < 0 or not parent - best_sse > tol:
        return -1, 0.0, 0.0
    return best_f, best_thr, parent - best_sse


def tree_apply(feature, threshold, left, right, value, X):
    X = np.asarray(X, dtype=np.float64)
    feature = np.asarray(feature)
    node = np.zeros(X.shape[0], dtype=np.intp)
    while True:
        f = feature[node]
        idx = np.flatnonzero(f >= 0)
        if idx.size == 0:
            break
        cur = node[idx]
        go_left = X[idx, f[idx]] <= threshold[cur]
        node[idx] = np.where(go_left, left[cur], right[cur])
    return np.asarray(value, dtype=np.float64)[node]
