"""Network layers with handwritten forward and backward passes.

All layers take NHWC (or flattened ND) float arrays. forward() returns the
output plus an opaque context consumed by backward(), so layer objects stay
read-only during inference and many threads may share them. backward() returns
the input gradient and one gradient array per entry of params.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionError


class Layer:
    params: tuple[np.ndarray, ...] = ()

    def forward(self, x, train=False, rng=None):
        raise NotImplementedError

    def backward(self, dout, ctx):
        raise NotImplementedError


class Conv2D(Layer):
    """3x3 stride-1 convolution with same (zero) padding. Weights are OIHW."""

    def __init__(self, out_channels: int, in_channels: int, kernel: int = 3, dtype=np.float32):
        if kernel % 2 != 1:
            raise ValueError("kernel size must be odd for same padding")
        self.W = np.zeros((out_channels, in_channels, kernel, kernel), dtype=dtype)
        self.b = np.zeros(out_channels, dtype=dtype)

    @property
    def params(self):
        return (self.W, self.b)

    def _wmat(self):
        # (C*k*k, F), flattened in the (C, kh, kw) order of the patch columns
        f, c, k, _ = self.W.shape
        return self.W.transpose(1, 2, 3, 0).reshape(c * k * k, f)

    def forward(self, x, train=False, rng=None):
        n, h, w, c = x.shape
        f, c_in, k, _ = self.W.shape
        if c != c_in:
            raise DimensionError(f"conv expects {c_in} input channels, got {c}")
        p = k // 2
        xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))
        cols = sliding_window_view(xp, (k, k), axis=(1, 2))  # (N, H, W, C, k, k)
        cols = np.ascontiguousarray(cols).reshape(n, h, w, c * k * k)
        y = cols @ self._wmat() + self.b
        return y, (cols, x.shape)

    def backward(self, dout, ctx):
        cols, x_shape = ctx
        n, h, w, c = x_shape
        f, _, k, _ = self.W.shape
        p = k // 2
        db = dout.sum(axis=(0, 1, 2))
        flat_cols = cols.reshape(n * h * w, c * k * k)
        flat_dout = dout.reshape(n * h * w, f)
        dwmat = flat_cols.T @ flat_dout
        dW = dwmat.reshape(c, k, k, f).transpose(3, 0, 1, 2)
        dcols = (flat_dout @ self._wmat().T).reshape(n, h, w, c, k, k)
        dxp = np.zeros((n, h + 2 * p, w + 2 * p, c), dtype=dout.dtype)
        for ki in range(k):
            for kj in range(k):
                dxp[:, ki : ki + h, kj : kj + w, :] += dcols[:, :, :, :, ki, kj]
        dx = dxp[:, p : p + h, p : p + w, :]
        return dx, (dW, db)


class ReLU(Layer):
    def forward(self, x, train=False, rng=None):
        mask = x > 0
        return x * mask, mask

    def backward(self, dout, ctx):
        return dout * ctx, ()


class MaxPool2x2(Layer):
    """2x2 max pooling, stride 2. Ties route the gradient to the first maximum."""

    def forward(self, x, train=False, rng=None):
        n, h, w, c = x.shape
        if h % 2 or w % 2:
            raise DimensionError(f"pooling needs even spatial dims, got {h}x{w}")
        windows = (
            x.reshape(n, h // 2, 2, w // 2, 2, c)
            .transpose(0, 1, 3, 5, 2, 4)
            .reshape(n, h // 2, w // 2, c, 4)
        )
        idx = windows.argmax(axis=4)
        y = np.take_along_axis(windows, idx[..., None], axis=4)[..., 0]
        return y, (idx, x.shape)

    def backward(self, dout, ctx):
        idx, (n, h, w, c) = ctx
        dwin = np.zeros((n, h // 2, w // 2, c, 4), dtype=dout.dtype)
        np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=4)
        dx = (
            dwin.reshape(n, h // 2, w // 2, c, 2, 2)
            .transpose(0, 1, 4, 2, 5, 3)
            .reshape(n, h, w, c)
        )
        return dx, ()


class Dropout(Layer):
    """Inverted dropout: active only in train mode, identity in inference."""

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, train=False, rng=None):
        if not train or self.rate == 0.0:
            return x, None
        if rng is None:
            raise ValueError("train-mode dropout needs an rng")
        keep = (rng.random(x.shape) >= self.rate).astype(x.dtype)
        keep /= 1.0 - self.rate
        return x * keep, keep

    def backward(self, dout, ctx):
        if ctx is None:
            return dout, ()
        return dout * ctx, ()


class Flatten(Layer):
    def forward(self, x, train=False, rng=None):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dout, ctx):
        return dout.reshape(ctx), ()


class Dense(Layer):
    """Fully connected layer; weights are (in_features, out_features)."""

    def __init__(self, in_features: int, out_features: int, dtype=np.float32):
        self.W = np.zeros((in_features, out_features), dtype=dtype)
        self.b = np.zeros(out_features, dtype=dtype)

    @property
    def params(self):
        return (self.W, self.b)

    def forward(self, x, train=False, rng=None):
        if x.shape[1] != self.W.shape[0]:
            raise DimensionError(
                f"dense expects {self.W.shape[0]} features, got {x.shape[1]}"
            )
        return x @ self.W + self.b, x

    def backward(self, dout, ctx):
        dW = ctx.T @ dout
        db = dout.sum(axis=0)
        dx = dout @ self.W.T
        return dx, (dW, db)
