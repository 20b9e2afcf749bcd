# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel implementations.

Each routine mirrors the arithmetic of kernels._ref operation for
operation (same accumulation order, same expressions), so the two
backends return bit-identical results.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

NAME = "cython"

cdef double EPS = 1e-12


def pairwise_sq_dists(a_in, b_in):
    """Squared Euclidean distances, (n, m) for (n, d) x (m, d) inputs."""
    cdef double[:, ::1] a = np.ascontiguousarray(a_in, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], d = a.shape[1]
    out_arr = np.zeros((n, m))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double diff
    with nogil:
        for k in range(d):
            for i in range(n):
                for j in range(m):
                    diff = a[i, k] - b[j, k]
                    out[i, j] += diff * diff
    return out_arr


def build_histograms(codes_in, rows_in, grad_in, hess_in, int n_bins):
    """Per-feature bin sums of gradients, hessians and counts over rows."""
    cdef const unsigned char[:, ::1] codes = codes_in
    cdef const long long[::1] rows = np.ascontiguousarray(rows_in, dtype=np.int64)
    cdef const double[::1] grad = np.ascontiguousarray(grad_in, dtype=np.float64)
    cdef const double[::1] hess = np.ascontiguousarray(hess_in, dtype=np.float64)
    cdef Py_ssize_t d = codes.shape[1], m = rows.shape[0]
    gsum_arr = np.zeros((d, n_bins))
    hsum_arr = np.zeros((d, n_bins))
    count_arr = np.zeros((d, n_bins), dtype=np.int64)
    cdef double[:, ::1] gsum = gsum_arr
    cdef double[:, ::1] hsum = hsum_arr
    cdef long long[:, ::1] count = count_arr
    cdef Py_ssize_t idx, j, row
    cdef int bin_idx
    with nogil:
        for j in range(d):
            for idx in range(m):
                row = rows[idx]
                bin_idx = codes[row, j]
                gsum[j, bin_idx] += grad[row]
                hsum[j, bin_idx] += hess[row]
                count[j, bin_idx] += 1
    return gsum_arr, hsum_arr, count_arr


def best_split(gsum_in, hsum_in, count_in, double l2, long long min_leaf=1):
    """First (lowest feature, lowest bin) maximiser of the split gain."""
    cdef const double[:, ::1] gsum = np.ascontiguousarray(gsum_in, dtype=np.float64)
    cdef const double[:, ::1] hsum = np.ascontiguousarray(hsum_in, dtype=np.float64)
    cdef const long long[:, ::1] count = np.ascontiguousarray(count_in, dtype=np.int64)
    cdef Py_ssize_t d = gsum.shape[0], nb = gsum.shape[1]
    if nb < 2:
        return (-1, -1, 0.0)
    cdef Py_ssize_t j, b, best_j = -1, best_b = -1
    cdef double g_tot, h_tot, gl, hl, gr, hr, parent, gain, best_gain = 0.0
    cdef long long c_tot, cl, cr
    with nogil:
        for j in range(d):
            g_tot = 0.0
            h_tot = 0.0
            c_tot = 0
            for b in range(nb):
                g_tot += gsum[j, b]
                h_tot += hsum[j, b]
                c_tot += count[j, b]
            if h_tot + l2 > 0.0:
                parent = g_tot * g_tot / (h_tot + l2)
            else:
                parent = 0.0
            gl = 0.0
            hl = 0.0
            cl = 0
            for b in range(nb - 1):
                gl += gsum[j, b]
                hl += hsum[j, b]
                cl += count[j, b]
                gr = g_tot - gl
                hr = h_tot - hl
                cr = c_tot - cl
                if cl < min_leaf or cr < min_leaf:
                    continue
                if hl + l2 <= 0.0 or hr + l2 <= 0.0:
                    continue
                gain = gl * gl / (hl + l2) + gr * gr / (hr + l2) - parent
                if gain > best_gain:
                    best_gain = gain
                    best_j = j
                    best_b = b
    if best_j < 0:
        return (-1, -1, 0.0)
    return (best_j, best_b, best_gain)


# -- SMO ---------------------------------------------------------------------


cdef bint _take_step(Py_ssize_t i1, Py_ssize_t i2,
                     const double[:, ::1] K, const double[::1] y,
                     double[::1] alpha, double[::1] f, double* b_ptr,
                     double C) nogil:
    if i1 == i2:
        return False
    cdef double b = b_ptr[0]
    cdef double a1_old = alpha[i1], a2_old = alpha[i2]
    cdef double y1 = y[i1], y2 = y[i2]
    cdef double e1 = f[i1] + b - y1
    cdef double e2 = f[i2] + b - y2
    cdef double s = y1 * y2
    cdef double lo, hi
    if s > 0:
        lo = max(0.0, a1_old + a2_old - C)
        hi = min(C, a1_old + a2_old)
    else:
        lo = max(0.0, a2_old - a1_old)
        hi = min(C, C + a2_old - a1_old)
    if lo == hi:
        return False
    cdef double k11 = K[i1, i1], k12 = K[i1, i2], k22 = K[i2, i2]
    cdef double eta = k11 + k22 - 2.0 * k12
    cdef double a2, a1, gamma, v1, v2, l1, h1, lobj, hobj
    if eta > 0.0:
        a2 = a2_old + y2 * (e1 - e2) / eta
        a2 = min(max(a2, lo), hi)
    else:
        gamma = a1_old + s * a2_old
        v1 = f[i1] - y1 * a1_old * k11 - y2 * a2_old * k12
        v2 = f[i2] - y1 * a1_old * k12 - y2 * a2_old * k22
        l1 = gamma - s * lo
        h1 = gamma - s * hi
        lobj = (l1 + lo - 0.5 * (l1 * l1 * k11 + lo * lo * k22)
                - s * l1 * lo * k12 - y1 * l1 * v1 - y2 * lo * v2)
        hobj = (h1 + hi - 0.5 * (h1 * h1 * k11 + hi * hi * k22)
                - s * h1 * hi * k12 - y1 * h1 * v1 - y2 * hi * v2)
        if lobj > hobj + EPS:
            a2 = lo
        elif hobj > lobj + EPS:
            a2 = hi
        else:
            a2 = a2_old
    if fabs(a2 - a2_old) < EPS * (a2 + a2_old + EPS):
        return False
    a1 = a1_old + s * (a2_old - a2)
    if a1 < 0.0:
        a1 = 0.0
    elif a1 > C:
        a1 = C
    cdef double d1 = y1 * (a1 - a1_old)
    cdef double d2 = y2 * (a2 - a2_old)
    cdef double b1 = b - e1 - d1 * k11 - d2 * k12
    cdef double b2 = b - e2 - d1 * k12 - d2 * k22
    cdef double new_b
    if 0.0 < a1 < C:
        new_b = b1
    elif 0.0 < a2 < C:
        new_b = b2
    else:
        new_b = (b1 + b2) / 2.0
    cdef Py_ssize_t i
    for i in range(K.shape[0]):
        f[i] += d1 * K[i1, i] + d2 * K[i2, i]
    alpha[i1] = a1
    alpha[i2] = a2
    b_ptr[0] = new_b
    return True


cdef bint _examine(Py_ssize_t i2, const double[:, ::1] K, const double[::1] y,
                   double[::1] alpha, double[::1] f, double* b_ptr,
                   double C, double tol) nogil:
    cdef double b = b_ptr[0]
    cdef double y2 = y[i2]
    cdef double a2 = alpha[i2]
    cdef double e2 = f[i2] + b - y2
    cdef double r2 = e2 * y2
    if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0.0)):
        return False
    cdef Py_ssize_t n = K.shape[0]
    cdef Py_ssize_t i, i1 = -1
    cdef Py_ssize_t n_non_bound = 0
    cdef double gap, best_gap = -1.0
    for i in range(n):
        if 0.0 < alpha[i] < C:
            n_non_bound += 1
            gap = fabs((f[i] + b - y[i]) - e2)
            if gap > best_gap:
                best_gap = gap
                i1 = i
    if n_non_bound > 1 and i1 >= 0:
        if _take_step(i1, i2, K, y, alpha, f, b_ptr, C):
            return True
    for i in range(n):
        if 0.0 < alpha[i] < C:
            if _take_step(i, i2, K, y, alpha, f, b_ptr, C):
                return True
    for i in range(n):
        if _take_step(i, i2, K, y, alpha, f, b_ptr, C):
            return True
    return False


def smo_solve(K_in, y_in, double C, double tol=1e-3, long long max_passes=10000):
    """Deterministic SMO for the soft-margin SVM dual; see kernels._ref."""
    K_arr = np.ascontiguousarray(K_in, dtype=np.float64)
    y_arr = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef const double[:, ::1] K = K_arr
    cdef const double[::1] y = y_arr
    cdef Py_ssize_t n = K.shape[0]
    alpha_arr = np.zeros(n)
    f_arr = np.zeros(n)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] f = f_arr
    cdef double b = 0.0
    cdef bint examine_all = True
    cdef long long passes = 0, changed
    cdef Py_ssize_t i
    cdef bint converged = False
    with nogil:
        while passes < max_passes:
            passes += 1
            changed = 0
            if examine_all:
                for i in range(n):
                    changed += _examine(i, K, y, alpha, f, &b, C, tol)
            else:
                for i in range(n):
                    if 0.0 < alpha[i] < C:
                        changed += _examine(i, K, y, alpha, f, &b, C, tol)
            if examine_all:
                if changed == 0:
                    converged = True
                    break
                examine_all = False
            elif changed == 0:
                examine_all = True
    return alpha_arr, b, converged
