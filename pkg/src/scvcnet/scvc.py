"""Sliding cross-vector convolution and the SCVCNet feedforward path.

Only the central row and central column of each d x d kernel are live. For a
theta vector ``x`` (length m) and an alpha vector ``y`` (length n), entry
(k, l) of the map is::

    <W[h, :], x_pad[k:k+d]> + <W[:, h], y_pad[l:l+d]> - w_c x_k - w_c y_l + g x_k y_l

with ``h = d // 2``, ``w_c = W[h, h]`` and ``g = w_c**2`` ("squared" cross
term, default) or ``g = w_c`` ("plain"). Positions skipped by the stride stay 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels

CROSS_TERMS = ("squared", "plain")


class ShapeError(ValueError):
    pass


def _check_kernel(d, stride, cross_term):
    if d < 1 or d % 2 == 0:
        raise ValueError(f"kernel size must be odd, got {d}")
    if int(stride) != stride or stride < 1:
        raise ValueError(f"stride must be a positive integer, got {stride}")
    if cross_term not in CROSS_TERMS:
        raise ValueError(f"cross_term must be one of {CROSS_TERMS}, got {cross_term!r}")


@dataclass
class KernelBank:
    """SCVC weights (c, p, q, d, d) and biases (c,) plus how they were drawn."""

    W: np.ndarray
    b: np.ndarray
    seed: int | None = None
    init_bound: float | None = None

    def __post_init__(self):
        self.W = np.ascontiguousarray(self.W, dtype=np.float64)
        self.b = np.ascontiguousarray(self.b, dtype=np.float64)
        if self.W.ndim != 5 or self.W.shape[3] != self.W.shape[4]:
            raise ShapeError(f"W must be (c, p, q, d, d), got {self.W.shape}")
        if self.b.shape != (self.W.shape[0],):
            raise ShapeError(f"b must have length c={self.W.shape[0]}, got {self.b.shape}")
        if self.W.shape[3] % 2 == 0:
            raise ValueError(f"kernel size must be odd, got {self.W.shape[3]}")

    @property
    def shape(self):
        return self.W.shape

    c = property(lambda self: self.W.shape[0])
    p = property(lambda self: self.W.shape[1])
    q = property(lambda self: self.W.shape[2])
    d = property(lambda self: self.W.shape[3])


def scvc(x, y, W, s=1, cross_term="squared"):
    """SCVC map of one theta/alpha frequency pair, shape (len(x), len(y))."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ShapeError(f"kernel must be square, got {W.shape}")
    _check_kernel(W.shape[0], s, cross_term)
    return kernels.scvc(np.ravel(x), np.ravel(y), W, int(s), cross_term == "squared")


def ifpfi(X, Y, bank, s=1, cross_term="squared"):
    """Sum of SCVC maps over all (theta, alpha) frequency pairs, plus bias.

    Accepts a single epoch (X: p x m, Y: q x n) -> (c, m, n), or a batch
    (N, p, m) / (N, q, n) -> (N, c, m, n).
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    single = X.ndim == 2
    if single:
        X, Y = X[None], Y[None]
    if X.ndim != 3 or Y.ndim != 3 or X.shape[0] != Y.shape[0]:
        raise ShapeError(f"incompatible theta/alpha batches {X.shape} and {Y.shape}")
    expected = (bank.p, bank.q)
    if (X.shape[1], Y.shape[1]) != expected:
        raise ShapeError(
            f"bank expects p x q = {expected[0]} x {expected[1]} frequency points, "
            f"got {X.shape[1]} x {Y.shape[1]}")
    _check_kernel(bank.d, s, cross_term)
    H = kernels.ifpfi(X, Y, bank.W, bank.b, int(s), cross_term == "squared")
    return H[0] if single else H


def activate(H):
    """Logistic sigmoid, overflow-free for any finite input."""
    H = np.asarray(H, dtype=np.float64)
    out = np.empty_like(H)
    pos = H >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-H[pos]))
    e = np.exp(H[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def channel_pool(H, axis=0):
    """Mean over the output-channel axis."""
    H = np.asarray(H, dtype=np.float64)
    if H.shape[axis] == 0:
        raise ShapeError("cannot pool over zero output channels")
    return H.mean(axis=axis)


def flatten(Z):
    """Row-major: entry (k, l) of an m x n map lands at k * n + l."""
    Z = np.asarray(Z)
    return Z.reshape(Z.shape[:-2] + (-1,))


def unflatten(z, m, n):
    z = np.asarray(z)
    return z.reshape(z.shape[:-1] + (m, n))


def forward(X, Y, bank, s=1, cross_term="squared"):
    """Feature vector(s) in (0, 1): flatten(channel_pool(activate(ifpfi(...)))).

    Single epoch -> (m*n,), batch -> (N, m*n).
    """
    H = ifpfi(X, Y, bank, s, cross_term)
    return flatten(channel_pool(activate(H), axis=-3))


def pair_maps(X, Y, bank, s=1, cross_term="squared"):
    """Per-pair SCVC maps before fusion, shape (c, p, q, m, n), for one epoch."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    _check_kernel(bank.d, s, cross_term)
    W = bank.W
    h = bank.d // 2
    m, n = X.shape[1], Y.shape[1]
    xw = np.lib.stride_tricks.sliding_window_view(np.pad(X, ((0, 0), (h, h))), bank.d, axis=1)
    yw = np.lib.stride_tricks.sliding_window_view(np.pad(Y, ((0, 0), (h, h))), bank.d, axis=1)
    wc = W[:, :, :, h, h]
    g = wc * wc if cross_term == "squared" else wc
    row = np.einsum("kijt,imt->kijm", W[:, :, :, h, :], xw) - wc[..., None] * X[None, :, None, :]
    col = np.einsum("kijt,jnt->kijn", W[:, :, :, :, h], yw) - wc[..., None] * Y[None, None, :, :]
    H = row[..., :, None] + col[..., None, :] + g[..., None, None] * (X[None, :, None, :, None] * Y[None, None, :, None, :])
    if s > 1:
        mask = np.zeros((m, n), dtype=bool)
        mask[::s, ::s] = True
        H = np.where(mask, H, 0.0)
    return H
