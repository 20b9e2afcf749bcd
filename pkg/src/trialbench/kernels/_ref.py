"""Pure-numpy kernel implementations.

This is the fallback backend used when the compiled extension is absent.
Accumulation orders deliberately mirror the extension's C loops (feature
by feature, row by row, sequential prefix sums), so both backends return
bit-identical results; tests and the kernel benchmark rely on that.
"""

import numpy as np

NAME = "python"


def pairwise_sq_dists(a, b):
    """Squared Euclidean distances, (n, m) for (n, d) x (m, d) inputs."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    out = np.zeros((a.shape[0], b.shape[0]))
    for j in range(a.shape[1]):
        diff = a[:, j][:, None] - b[:, j][None, :]
        out += diff * diff
    return out


def build_histograms(codes, rows, grad, hess, n_bins):
    """Per-feature bin sums of gradients, hessians and counts over rows.

    codes is the binned feature matrix (n, d) of uint8 bin indices; rows
    selects the node's samples. bincount accumulates in row order, which
    matches the extension's sequential loop exactly.
    """
    rows = np.asarray(rows, dtype=np.int64)
    sub = codes[rows]
    g_rows = grad[rows]
    h_rows = hess[rows]
    d = codes.shape[1]
    gsum = np.empty((d, n_bins))
    hsum = np.empty((d, n_bins))
    count = np.empty((d, n_bins), dtype=np.int64)
    for j in range(d):
        bj = sub[:, j]
        gsum[j] = np.bincount(bj, weights=g_rows, minlength=n_bins)
        hsum[j] = np.bincount(bj, weights=h_rows, minlength=n_bins)
        count[j] = np.bincount(bj, minlength=n_bins)
    return gsum, hsum, count


def best_split(gsum, hsum, count, l2, min_leaf=1):
    """Best histogram split over all features.

    The candidate after bin b puts bins 0..b left and the rest right;
    its gain is GL^2/(HL+l2) + GR^2/(HR+l2) - G^2/(H+l2). Returns
    (feature, bin, gain) with the first (lowest feature, then lowest
    bin) maximiser, or (-1, -1, 0.0) when no candidate gain is positive.
    """
    d, nb = gsum.shape
    if nb < 2:
        return (-1, -1, 0.0)
    gl = np.cumsum(gsum, axis=1)
    hl = np.cumsum(hsum, axis=1)
    cl = np.cumsum(count, axis=1)
    g_tot, h_tot, c_tot = gl[:, -1], hl[:, -1], cl[:, -1]
    glb, hlb, clb = gl[:, :-1], hl[:, :-1], cl[:, :-1]
    grb = g_tot[:, None] - glb
    hrb = h_tot[:, None] - hlb
    crb = c_tot[:, None] - clb
    valid = (clb >= min_leaf) & (crb >= min_leaf) \
        & (hlb + l2 > 0.0) & (hrb + l2 > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        parent = np.where(h_tot + l2 > 0.0, g_tot * g_tot / (h_tot + l2), 0.0)
        gain = (glb * glb / (hlb + l2) + grb * grb / (hrb + l2)
                - parent[:, None])
    gain = np.where(valid, gain, -np.inf)
    flat = int(np.argmax(gain))
    best = gain.flat[flat]
    if not np.isfinite(best) or best <= 0.0:
        return (-1, -1, 0.0)
    return (flat // (nb - 1), flat % (nb - 1), float(best))


# -- SMO ---------------------------------------------------------------------

_EPS = 1e-12


def _take_step(i1, i2, K, y, alpha, f, state, C):
    if i1 == i2:
        return False
    b = state[0]
    a1_old, a2_old = alpha[i1], alpha[i2]
    y1, y2 = y[i1], y[i2]
    e1 = f[i1] + b - y1
    e2 = f[i2] + b - y2
    s = y1 * y2
    if s > 0:
        lo = max(0.0, a1_old + a2_old - C)
        hi = min(C, a1_old + a2_old)
    else:
        lo = max(0.0, a2_old - a1_old)
        hi = min(C, C + a2_old - a1_old)
    if lo == hi:
        return False
    k11 = K[i1, i1]
    k12 = K[i1, i2]
    k22 = K[i2, i2]
    eta = k11 + k22 - 2.0 * k12
    if eta > 0.0:
        a2 = a2_old + y2 * (e1 - e2) / eta
        a2 = min(max(a2, lo), hi)
    else:
        # flat or concave direction: evaluate the dual at both ends and
        # keep the larger one (the dual is maximized)
        gamma = a1_old + s * a2_old
        v1 = f[i1] - y1 * a1_old * k11 - y2 * a2_old * k12
        v2 = f[i2] - y1 * a1_old * k12 - y2 * a2_old * k22
        l1 = gamma - s * lo
        h1 = gamma - s * hi
        lobj = (l1 + lo - 0.5 * (l1 * l1 * k11 + lo * lo * k22)
                - s * l1 * lo * k12 - y1 * l1 * v1 - y2 * lo * v2)
        hobj = (h1 + hi - 0.5 * (h1 * h1 * k11 + hi * hi * k22)
                - s * h1 * hi * k12 - y1 * h1 * v1 - y2 * hi * v2)
        if lobj > hobj + _EPS:
            a2 = lo
        elif hobj > lobj + _EPS:
            a2 = hi
        else:
            a2 = a2_old
    if abs(a2 - a2_old) < _EPS * (a2 + a2_old + _EPS):
        return False
    a1 = a1_old + s * (a2_old - a2)
    if a1 < 0.0:
        a1 = 0.0
    elif a1 > C:
        a1 = C
    d1 = y1 * (a1 - a1_old)
    d2 = y2 * (a2 - a2_old)
    b1 = b - e1 - d1 * k11 - d2 * k12
    b2 = b - e2 - d1 * k12 - d2 * k22
    if 0.0 < a1 < C:
        new_b = b1
    elif 0.0 < a2 < C:
        new_b = b2
    else:
        new_b = (b1 + b2) / 2.0
    f += d1 * K[i1] + d2 * K[i2]
    alpha[i1] = a1
    alpha[i2] = a2
    state[0] = new_b
    return True


def _examine(i2, K, y, alpha, f, state, C, tol):
    b = state[0]
    y2 = y[i2]
    a2 = alpha[i2]
    e2 = f[i2] + b - y2
    r2 = e2 * y2
    if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0.0)):
        return False
    non_bound = np.flatnonzero((alpha > 0.0) & (alpha < C))
    if non_bound.size > 1:
        errors = f[non_bound] + b - y[non_bound]
        i1 = int(non_bound[np.argmax(np.abs(errors - e2))])
        if _take_step(i1, i2, K, y, alpha, f, state, C):
            return True
    for i1 in non_bound:
        if _take_step(int(i1), i2, K, y, alpha, f, state, C):
            return True
    for i1 in range(K.shape[0]):
        if _take_step(i1, i2, K, y, alpha, f, state, C):
            return True
    return False


def smo_solve(K, y, C, tol=1e-3, max_passes=10000):
    """Sequential minimal optimization for the soft-margin SVM dual.

    K is the (symmetric PSD) Gram matrix, y holds labels in {-1, +1}.
    Returns (alpha, b, converged) with decision value
    sum_j alpha_j y_j K[j, i] + b. The pair-selection heuristics are
    Platt's, made deterministic by scanning candidates in index order.
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = K.shape[0]
    alpha = np.zeros(n)
    f = np.zeros(n)  # decision values minus the threshold term
    state = np.zeros(1)  # [b]
    examine_all = True
    passes = 0
    while passes < max_passes:
        passes += 1
        changed = 0
        if examine_all:
            for i in range(n):
                changed += _examine(i, K, y, alpha, f, state, C, tol)
        else:
            # bound status is re-checked live, exactly like the extension
            for i in range(n):
                if 0.0 < alpha[i] < C:
                    changed += _examine(i, K, y, alpha, f, state, C, tol)
        if examine_all:
            if changed == 0:
                return alpha, float(state[0]), True
            examine_all = False
        elif changed == 0:
            examine_all = True
    return alpha, float(state[0]), False
