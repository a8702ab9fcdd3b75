"""Slow, literal reference implementations used as oracles.

Each routine follows its textbook definition loop by loop (the Welch oracle
only uses ``np.dot`` for the inner DFT sums, never an FFT) so the optimized
paths can be checked against it.
"""
from __future__ import annotations

import math

import numpy as np


def scvc_literal(x, y, W, s=1, cross_term="squared"):
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    W = np.asarray(W, dtype=float)
    d = W.shape[0]
    half = d // 2
    m, n = len(x), len(y)
    H = [[0.0] * n for _ in range(m)]
    z = [0.0] * half
    xp = z + x + z
    yp = z + y + z
    w_row = [W[half, t] for t in range(d)]
    w_col = [W[t, half] for t in range(d)]
    wc = W[half, half]
    for k in range(half, half + m, s):
        for l in range(half, half + n, s):
            h_row = 0.0
            for t in range(d):
                h_row += w_row[t] * xp[k - half + t]
            h_col = 0.0
            for t in range(d):
                h_col += w_col[t] * yp[l - half + t]
            h = h_row + h_col
            if cross_term == "squared":
                h = h + wc * wc * xp[k] * yp[l] - wc * xp[k] - wc * yp[l]
            else:
                h = h + wc * xp[k] * yp[l] - wc * xp[k] - wc * yp[l]
            H[k - half][l - half] = h
    return np.array(H)


def ifpfi_literal(X, Y, W, b, s=1, cross_term="squared"):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    c, p, q = W.shape[0], W.shape[1], W.shape[2]
    m, n = X.shape[1], Y.shape[1]
    out = np.zeros((c, m, n))
    for k in range(c):
        pairs = np.zeros((p, q, m, n))
        for i in range(p):
            for j in range(q):
                pairs[i, j] = scvc_literal(X[i], Y[j], W[k, i, j], s, cross_term)
        acc = np.zeros((m, n))
        for i in range(p):
            for j in range(q):
                acc = acc + pairs[i, j]
        out[k] = acc + b[k]
    return out


def sigmoid_literal(h):
    return 1.0 / (1.0 + math.exp(-h)) if h >= 0 else math.exp(h) / (1.0 + math.exp(h))


def forward_literal(X, Y, W, b, s=1, cross_term="squared"):
    H = ifpfi_literal(X, Y, W, b, s, cross_term)
    c, m, n = H.shape
    Z = np.zeros((m, n))
    for a in range(m):
        for bb in range(n):
            tot = 0.0
            for k in range(c):
                tot += sigmoid_literal(H[k, a, bb])
            Z[a, bb] = tot / c
    return np.array([Z[a, bb] for a in range(m) for bb in range(n)])


def welch_literal(x, fs=128.0, nperseg=128, noverlap=64, nfft=512, detrend=True):
    """Averaged one-sided periodogram with an explicit DFT sum per bin (no FFT)."""
    x = np.asarray(x, dtype=float)
    step = nperseg - noverlap
    idx = np.arange(nperseg)
    # periodic Hamming
    win = np.array([0.54 - 0.46 * math.cos(2 * math.pi * i / nperseg) for i in range(nperseg)])
    wpow = float(np.dot(win, win))
    nbins = nfft // 2 + 1
    acc = np.zeros(nbins)
    count = 0
    start = 0
    while start + nperseg <= len(x):
        seg = x[start:start + nperseg].copy()
        if detrend:
            seg = seg - seg.sum() / nperseg
        seg = seg * win
        for kbin in range(nbins):
            ang = 2 * math.pi * kbin * idx / nfft
            re = np.dot(seg, np.cos(ang))
            im = -np.dot(seg, np.sin(ang))
            acc[kbin] += re * re + im * im
        count += 1
        start += step
    psd = np.empty(nbins)
    for kbin in range(nbins):
        v = acc[kbin] / count / (fs * wpow)
        if 0 < kbin < nfft // 2 or (kbin == nfft // 2 and nfft % 2):
            v *= 2.0
        psd[kbin] = v
    return psd


def repair_outliers_literal(x, threshold):
    out = []
    ref = None
    for v in x:
        v = float(v)
        if ref is None:
            if math.isfinite(v):
                ref = v
                out = [v] * (len(out) + 1)
            else:
                out.append(float("nan"))
            continue
        if math.isfinite(v) and abs(v - ref) <= threshold:
            ref = v
        out.append(ref)
    if ref is None:
        raise ValueError("no valid reference sample")
    return np.array(out)


def macro_f1_literal(labels, preds):
    scores = []
    for cls in (0, 1):
        tp = sum(1 for t, p in zip(labels, preds) if t == cls and p == cls)
        fp = sum(1 for t, p in zip(labels, preds) if t != cls and p == cls)
        fn = sum(1 for t, p in zip(labels, preds) if t == cls and p != cls)
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return sum(scores) / 2
