# cython: language_level=3
"""Compiled hot kernels. Signatures match ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, isfinite

cnp.import_array()

BACKEND_NAME = "cython"


def repair_outliers(x, double threshold):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t i, first = -1
    for i in range(n):
        if isfinite(xv[i]):
            first = i
            break
    if first < 0:
        raise ValueError("no valid reference sample")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double ref = xv[first]
    cdef double v
    cdef Py_ssize_t flagged = first
    for i in range(first):
        ov[i] = ref
    for i in range(first, n):
        v = xv[i]
        if isfinite(v) and fabs(v - ref) <= threshold:
            ref = v
        else:
            flagged += 1
        ov[i] = ref
    return out, flagged


def scvc(x, y, W, Py_ssize_t stride, bint squared):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[:, ::1] Wv = np.ascontiguousarray(W, dtype=np.float64)
    cdef Py_ssize_t m = xv.shape[0], n = yv.shape[0], d = Wv.shape[0]
    cdef Py_ssize_t h = d // 2
    cdef Py_ssize_t a, bb, t, idx
    cdef double wc = Wv[h, h]
    cdef double g = wc * wc if squared else wc
    cdef double r, cc
    out = np.zeros((m, n), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef double[::1] colv = np.zeros(n, dtype=np.float64)
    for bb in range(0, n, stride):
        cc = 0.0
        for t in range(d):
            idx = bb + t - h
            if 0 <= idx < n:
                cc += Wv[t, h] * yv[idx]
        colv[bb] = cc - wc * yv[bb]
    for a in range(0, m, stride):
        r = 0.0
        for t in range(d):
            idx = a + t - h
            if 0 <= idx < m:
                r += Wv[h, t] * xv[idx]
        r -= wc * xv[a]
        for bb in range(0, n, stride):
            ov[a, bb] = r + colv[bb] + g * xv[a] * yv[bb]
    return out


def ifpfi(X, Y, W, b, Py_ssize_t stride, bint squared):
    cdef double[:, :, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, :, ::1] Yv = np.ascontiguousarray(Y, dtype=np.float64)
    cdef double[:, :, :, :, ::1] Wv = np.ascontiguousarray(W, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t N = Xv.shape[0], p = Xv.shape[1], m = Xv.shape[2]
    cdef Py_ssize_t q = Yv.shape[1], n = Yv.shape[2]
    cdef Py_ssize_t c = Wv.shape[0], d = Wv.shape[4]
    cdef Py_ssize_t h = d // 2
    cdef Py_ssize_t e, k, i, j, t, a, bb, idx
    cdef double w, acc

    # bank reductions over the (i, j) sum, independent of the epoch
    cdef double[:, :, ::1] row_w = np.zeros((c, p, d))
    cdef double[:, :, ::1] col_w = np.zeros((c, q, d))
    cdef double[:, ::1] wc_x = np.zeros((c, p))
    cdef double[:, ::1] wc_y = np.zeros((c, q))
    cdef double[:, :, ::1] gain = np.zeros((c, p, q))
    for k in range(c):
        for i in range(p):
            for j in range(q):
                for t in range(d):
                    row_w[k, i, t] += Wv[k, i, j, h, t]
                    col_w[k, j, t] += Wv[k, i, j, t, h]
                w = Wv[k, i, j, h, h]
                wc_x[k, i] += w
                wc_y[k, j] += w
                gain[k, i, j] = w * w if squared else w

    out = np.zeros((N, c, m, n), dtype=np.float64)
    cdef double[:, :, :, ::1] ov = out
    cdef double[::1] row = np.zeros(m)
    cdef double[::1] col = np.zeros(n)
    cdef double[:, ::1] gy = np.zeros((p, n))

    for e in range(N):
        for k in range(c):
            for a in range(0, m, stride):
                acc = 0.0
                for i in range(p):
                    for t in range(d):
                        idx = a + t - h
                        if 0 <= idx < m:
                            acc += row_w[k, i, t] * Xv[e, i, idx]
                    acc -= wc_x[k, i] * Xv[e, i, a]
                row[a] = acc
            for bb in range(0, n, stride):
                acc = 0.0
                for j in range(q):
                    for t in range(d):
                        idx = bb + t - h
                        if 0 <= idx < n:
                            acc += col_w[k, j, t] * Yv[e, j, idx]
                    acc -= wc_y[k, j] * Yv[e, j, bb]
                col[bb] = acc
            for i in range(p):
                for bb in range(0, n, stride):
                    acc = 0.0
                    for j in range(q):
                        acc += gain[k, i, j] * Yv[e, j, bb]
                    gy[i, bb] = acc
            for a in range(m):
                for bb in range(n):
                    ov[e, k, a, bb] = bv[k]
            for a in range(0, m, stride):
                for bb in range(0, n, stride):
                    acc = 0.0
                    for i in range(p):
                        acc += Xv[e, i, a] * gy[i, bb]
                    ov[e, k, a, bb] += acc + row[a] + col[bb]
    return out
