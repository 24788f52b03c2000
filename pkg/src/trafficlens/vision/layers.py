"""Convolution, pooling and dense layers on NHWC arrays, with backward passes."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions import ShapeError


def conv_output_size(size: int, k: int, stride: int = 1, pad: int = 1) -> int:
    return (size + 2 * pad - k) // stride + 1


def _im2col(x, k, stride, pad):
    """Patches as rows: (N*Ho*Wo, K*K*C) in (dy, dx, c) order."""
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0))) if pad else x
    win = sliding_window_view(xp, (k, k), axis=(1, 2))[:, ::stride, ::stride]
    # win: (N, Ho, Wo, C, K, K) -> (N, Ho, Wo, K, K, C)
    n, ho, wo = win.shape[:3]
    cols = win.transpose(0, 1, 2, 4, 5, 3).reshape(n * ho * wo, -1)
    return cols, (n, ho, wo)


def conv2d(x, kernels, bias, stride: int = 1, pad: int = 1):
    """2-D cross-correlation.

    ``x`` is (N, H, W, C), ``kernels`` is (F, K, K, C), ``bias`` is (F,).
    Returns (N, Ho, Wo, F) with ``Ho = (H + 2 pad - K) // stride + 1``.
    """
    out, _ = conv2d_forward(x, kernels, bias, stride, pad)
    return out


def conv2d_forward(x, kernels, bias, stride=1, pad=1):
    x = np.asarray(x)
    kernels = np.asarray(kernels)
    if x.ndim != 4 or kernels.ndim != 4:
        raise ShapeError("conv2d expects NHWC input and (F, K, K, C) kernels")
    f, kh, kw, c = kernels.shape
    if kh != kw or kh % 2 == 0:
        raise ShapeError(f"kernel must be square with odd size, got {kh}x{kw}")
    if x.shape[3] != c:
        raise ShapeError(f"input has {x.shape[3]} channels, kernels expect {c}")
    if stride < 1 or pad < 0:
        raise ShapeError("stride must be >= 1 and pad >= 0")
    if x.shape[1] + 2 * pad < kh or x.shape[2] + 2 * pad < kw:
        raise ShapeError("kernel larger than padded input")
    cols, (n, ho, wo) = _im2col(x, kh, stride, pad)
    out = cols @ kernels.reshape(f, -1).T + bias
    return out.reshape(n, ho, wo, f), cols


def conv2d_backward(dout, x_shape, cols, kernels, stride=1, pad=1):
    """Gradients (dx, dkernels, dbias) given the forward patch matrix."""
    f, k, _, c = kernels.shape
    n, h, w, _ = x_shape
    _, ho, wo, _ = dout.shape
    d2 = dout.reshape(-1, f)
    dk = (d2.T @ cols).reshape(kernels.shape)
    db = d2.sum(axis=0)
    dcols = (d2 @ kernels.reshape(f, -1)).reshape(n, ho, wo, k, k, c)
    dxp = np.zeros((n, h + 2 * pad, w + 2 * pad, c), dtype=dout.dtype)
    for dy in range(k):
        for dx in range(k):
            dxp[:, dy:dy + stride * ho:stride, dx:dx + stride * wo:stride, :] += dcols[:, :, :, dy, dx, :]
    dx_ = dxp[:, pad:pad + h, pad:pad + w, :] if pad else dxp
    return dx_, dk, db


def maxpool2x2(x):
    """Non-overlapping 2x2 max pooling.

    Returns ``(out, argmax)``; ``argmax`` indexes the window in row-major
    order (0 top-left, 3 bottom-right), first maximum on ties.
    """
    x = np.asarray(x)
    if x.ndim != 4:
        raise ShapeError("maxpool2x2 expects an NHWC array")
    n, h, w, c = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"maxpool2x2 needs even spatial dims, got {h}x{w}")
    win = x.reshape(n, h // 2, 2, w // 2, 2, c).transpose(0, 1, 3, 5, 2, 4).reshape(n, h // 2, w // 2, c, 4)
    idx = win.argmax(axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return out, idx


def maxpool2x2_backward(dout, argmax):
    n, ho, wo, c = dout.shape
    win = np.zeros((n, ho, wo, c, 4), dtype=dout.dtype)
    np.put_along_axis(win, argmax[..., None], dout[..., None], axis=-1)
    return win.reshape(n, ho, wo, c, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(n, 2 * ho, 2 * wo, c)


def relu(x):
    return np.maximum(x, 0)


def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)
