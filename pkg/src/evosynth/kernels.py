"""Convolution and pooling kernels in two interchangeable backends.

The numba backend compiles naive loop nests with ``@njit(cache=True)``;
the numpy backend expresses the same math with stride tricks and
``tensordot``.  Both are single-threaded and run without fastmath so
results differ only by float summation order.  Selection happens once at
import from the ``EVOSYNTH_BACKEND`` environment variable:

    auto   use numba when importable, else numpy (default)
    numba  require numba, raise if missing
    numpy  pure numpy even when numba is present

Shared conventions, identical in both backends:
  * convolution is valid-mode cross-correlation, stride 1,
    x (N, C, H, W) with w (F, C, KH, KW) -> y (N, F, OH, OW);
  * pooling is 2x2, stride 2, ties resolved to the first window element
    in row-major order, with the winning offset k = dy * 2 + dx recorded
    for the backward pass.
"""

from __future__ import annotations

import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError

BACKEND_ENV_VAR = "EVOSYNTH_BACKEND"

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised via EVOSYNTH_BACKEND=numpy
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        return wrap


# ---------------------------------------------------------------------------
# numpy backend


def conv2d_forward_numpy(x, w, b):
    windows = sliding_window_view(x, w.shape[2:], axis=(2, 3))
    y = np.tensordot(windows, w, axes=[(1, 4, 5), (1, 2, 3)])
    y = np.ascontiguousarray(y.transpose(0, 3, 1, 2)) + b[None, :, None, None]
    return y.astype(x.dtype, copy=False)


def conv2d_backward_numpy(x, w, gy):
    kh, kw = w.shape[2:]
    windows = sliding_window_view(x, (kh, kw), axis=(2, 3))
    gw = np.tensordot(gy, windows, axes=[(0, 2, 3), (0, 2, 3)])
    gb = gy.sum(axis=(0, 2, 3))
    gy_pad = np.pad(gy, ((0, 0), (0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1)))
    gwin = sliding_window_view(gy_pad, (kh, kw), axis=(2, 3))
    w_flip = w[:, :, ::-1, ::-1]
    gx = np.tensordot(gwin, w_flip, axes=[(1, 4, 5), (0, 2, 3)])
    gx = np.ascontiguousarray(gx.transpose(0, 3, 1, 2))
    return (gx.astype(x.dtype, copy=False), gw.astype(w.dtype, copy=False),
            gb.astype(w.dtype, copy=False))


def maxpool2_forward_numpy(x):
    n, c, h, w = x.shape
    oh, ow = h // 2, w // 2
    windows = x.reshape(n, c, oh, 2, ow, 2).transpose(0, 1, 2, 4, 3, 5)
    windows = windows.reshape(n, c, oh, ow, 4)
    which = windows.argmax(axis=-1).astype(np.uint8)  # argmax takes first max
    y = np.take_along_axis(windows, which[..., None].astype(np.intp),
                           axis=-1)[..., 0]
    return np.ascontiguousarray(y), which


def maxpool2_backward_numpy(gy, which, h, w):
    n, c, oh, ow = gy.shape
    flat = np.zeros((n, c, oh, ow, 4), dtype=gy.dtype)
    np.put_along_axis(flat, which[..., None].astype(np.intp), gy[..., None],
                      axis=-1)
    gx = flat.reshape(n, c, oh, ow, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return np.ascontiguousarray(gx.reshape(n, c, h, w))


# ---------------------------------------------------------------------------
# numba backend


@njit(cache=True)
def conv2d_forward_numba(x, w, b):
    n_img, n_ch, h, w_ = x.shape
    n_f, _, kh, kw = w.shape
    oh = h - kh + 1
    ow = w_ - kw + 1
    y = np.empty((n_img, n_f, oh, ow), x.dtype)
    for n in range(n_img):
        for f in range(n_f):
            for i in range(oh):
                for j in range(ow):
                    acc = b[f]
                    for c in range(n_ch):
                        for a in range(kh):
                            for d in range(kw):
                                acc += x[n, c, i + a, j + d] * w[f, c, a, d]
                    y[n, f, i, j] = acc
    return y


@njit(cache=True)
def conv2d_backward_numba(x, w, gy):
    n_img, n_ch, h, w_ = x.shape
    n_f, _, kh, kw = w.shape
    oh = h - kh + 1
    ow = w_ - kw + 1
    gx = np.zeros(x.shape, x.dtype)
    gw = np.zeros(w.shape, w.dtype)
    gb = np.zeros(n_f, w.dtype)
    for n in range(n_img):
        for f in range(n_f):
            for i in range(oh):
                for j in range(ow):
                    g = gy[n, f, i, j]
                    gb[f] += g
                    for c in range(n_ch):
                        for a in range(kh):
                            for d in range(kw):
                                gx[n, c, i + a, j + d] += g * w[f, c, a, d]
                                gw[f, c, a, d] += g * x[n, c, i + a, j + d]
    return gx, gw, gb


@njit(cache=True)
def maxpool2_forward_numba(x):
    n_img, n_ch, h, w = x.shape
    oh = h // 2
    ow = w // 2
    y = np.empty((n_img, n_ch, oh, ow), x.dtype)
    which = np.empty((n_img, n_ch, oh, ow), np.uint8)
    for n in range(n_img):
        for c in range(n_ch):
            for i in range(oh):
                for j in range(ow):
                    best = x[n, c, 2 * i, 2 * j]
                    best_k = 0
                    for k in range(1, 4):
                        v = x[n, c, 2 * i + k // 2, 2 * j + k % 2]
                        if v > best:  # strict: ties keep the first element
                            best = v
                            best_k = k
                    y[n, c, i, j] = best
                    which[n, c, i, j] = best_k
    return y, which


@njit(cache=True)
def maxpool2_backward_numba(gy, which, h, w):
    n_img, n_ch, oh, ow = gy.shape
    gx = np.zeros((n_img, n_ch, h, w), gy.dtype)
    for n in range(n_img):
        for c in range(n_ch):
            for i in range(oh):
                for j in range(ow):
                    k = which[n, c, i, j]
                    gx[n, c, 2 * i + k // 2, 2 * j + k % 2] += gy[n, c, i, j]
    return gx


# ---------------------------------------------------------------------------
# backend selection

_BACKENDS = {
    "numpy": {
        "conv2d_forward": conv2d_forward_numpy,
        "conv2d_backward": conv2d_backward_numpy,
        "maxpool2_forward": maxpool2_forward_numpy,
        "maxpool2_backward": maxpool2_backward_numpy,
    },
    "numba": {
        "conv2d_forward": conv2d_forward_numba,
        "conv2d_backward": conv2d_backward_numba,
        "maxpool2_forward": maxpool2_forward_numba,
        "maxpool2_backward": maxpool2_backward_numba,
    },
}


def backend_functions(name: str) -> dict:
    """The four kernel entry points for an explicitly named backend."""
    if name == "numba" and not NUMBA_AVAILABLE:
        raise ConfigError("numba backend requested but numba is not installed")
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ConfigError(f"unknown backend {name!r}; use numba or numpy") from None


def _resolve_backend() -> str:
    choice = os.environ.get(BACKEND_ENV_VAR, "auto").strip().lower()
    if choice == "auto":
        return "numba" if NUMBA_AVAILABLE else "numpy"
    if choice not in _BACKENDS:
        raise ConfigError(
            f"{BACKEND_ENV_VAR} must be auto, numba, or numpy, got {choice!r}")
    if choice == "numba" and not NUMBA_AVAILABLE:
        raise ConfigError(f"{BACKEND_ENV_VAR}=numba but numba is not installed")
    return choice


# an invalid env value must not break package import; the error is deferred
# to the first kernel call or active_backend() so cli error handling can see it
try:
    _ACTIVE = _resolve_backend()
    _RESOLVE_ERROR = None
except ConfigError as exc:
    _ACTIVE = ""
    _RESOLVE_ERROR = exc


def active_backend() -> str:
    if _RESOLVE_ERROR is not None:
        raise _RESOLVE_ERROR
    return _ACTIVE


if _RESOLVE_ERROR is None:
    conv2d_forward = _BACKENDS[_ACTIVE]["conv2d_forward"]
    conv2d_backward = _BACKENDS[_ACTIVE]["conv2d_backward"]
    maxpool2_forward = _BACKENDS[_ACTIVE]["maxpool2_forward"]
    maxpool2_backward = _BACKENDS[_ACTIVE]["maxpool2_backward"]
else:
    def _deferred_backend_error(*_args, **_kwargs):
        raise _RESOLVE_ERROR

    conv2d_forward = _deferred_backend_error
    conv2d_backward = _deferred_backend_error
    maxpool2_forward = _deferred_backend_error
    maxpool2_backward = _deferred_backend_error
