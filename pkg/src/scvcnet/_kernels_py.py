"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` function for function and are used whenever the
compiled extension is unavailable (or ``SCVC_BACKEND=python`` is set).
"""
from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

# epochs per vectorized chunk in ifpfi; bounds the (chunk, c, p, n) temporary
_CHUNK = 64


def repair_outliers(x, threshold):
    """Sequential carry-forward repair.

    A sample is accepted when it is finite and within ``threshold`` of the most
    recently accepted sample; otherwise it is replaced by that sample. Leading
    non-finite samples are back-filled with the first finite one.

    Returns ``(repaired, n_flagged)``.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    finite = np.flatnonzero(np.isfinite(x))
    if finite.size == 0:
        raise ValueError("no valid reference sample")
    first = int(finite[0])
    out = np.empty_like(x)
    out[:first] = x[first]
    ref = x[first]
    flagged = first
    thr = float(threshold)
    for i in range(first, x.shape[0]):
        v = x[i]
        if np.isfinite(v) and abs(v - ref) <= thr:
            ref = v
        else:
            flagged += 1
        out[i] = ref
    return out, flagged


def scvc(x, y, W, stride, squared):
    """Single frequency-pair SCVC map (m x n)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    d = W.shape[0]
    h = d // 2
    m, n = x.shape[0], y.shape[0]
    xw = np.lib.stride_tricks.sliding_window_view(np.pad(x, h), d)
    yw = np.lib.stride_tricks.sliding_window_view(np.pad(y, h), d)
    row = xw @ W[h, :]
    col = yw @ W[:, h]
    wc = W[h, h]
    g = wc * wc if squared else wc
    H = (row - wc * x)[:, None] + (col - wc * y)[None, :] + g * np.outer(x, y)
    out = np.zeros((m, n))
    out[::stride, ::stride] = H[::stride, ::stride]
    return out


def _reduce_bank(W, squared):
    """Collapse the bank to the quantities that survive the (i, j) sum."""
    h = W.shape[-1] // 2
    row_w = W[:, :, :, h, :].sum(axis=2)  # (c, p, d)
    col_w = W[:, :, :, :, h].sum(axis=1)  # (c, q, d)
    wc = W[:, :, :, h, h]  # (c, p, q)
    gain = wc * wc if squared else wc
    return row_w, col_w, wc.sum(axis=2), wc.sum(axis=1), gain


def ifpfi(X, Y, W, b, stride, squared):
    """Fused SCVC maps for a batch of epochs.

    X: (N, p, m), Y: (N, q, n), W: (c, p, q, d, d), b: (c,) -> (N, c, m, n)
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    N, p, m = X.shape
    q, n = Y.shape[1], Y.shape[2]
    c, d = W.shape[0], W.shape[-1]
    h = d // 2
    row_w, col_w, wc_x, wc_y, gain = _reduce_bank(W, squared)

    out = np.zeros((N, c, m, n))
    for lo in range(0, N, _CHUNK):
        Xc = X[lo:lo + _CHUNK]
        Yc = Y[lo:lo + _CHUNK]
        xw = np.lib.stride_tricks.sliding_window_view(
            np.pad(Xc, ((0, 0), (0, 0), (h, h))), d, axis=2)  # (B, p, m, d)
        yw = np.lib.stride_tricks.sliding_window_view(
            np.pad(Yc, ((0, 0), (0, 0), (h, h))), d, axis=2)  # (B, q, n, d)
        row = np.einsum("kit,bimt->bkm", row_w, xw)
        col = np.einsum("kjt,bjnt->bkn", col_w, yw)
        row -= np.einsum("ki,bim->bkm", wc_x, Xc)
        col -= np.einsum("kj,bjn->bkn", wc_y, Yc)
        # bilinear centre term: X_i^T (gain_k) Y_j, contracted over i then j
        gy = np.einsum("kij,bjn->bkin", gain, Yc)
        bil = np.matmul(Xc.transpose(0, 2, 1)[:, None, :, :], gy)  # (B, c, m, n)
        H = bil + row[:, :, :, None] + col[:, :, None, :]
        if stride > 1:
            mask = np.zeros((m, n), dtype=bool)
            mask[::stride, ::stride] = True
            H = np.where(mask, H, 0.0)
        out[lo:lo + _CHUNK] = H + b[None, :, None, None]
    return out
