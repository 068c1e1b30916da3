"""The convolutional classifier: architecture, training, and the gradient oracle.

Layer stack (two conv blocks, then the dense head):

    Conv+ReLU, Conv+ReLU, MaxPool 2x2, Dropout 0.25,
    Conv+ReLU, Conv+ReLU, MaxPool 2x2, Dropout 0.25,
    Flatten, Dense, Dropout 0.5, Dense + Softmax.

Widths are parameterized so desk-scale tests can shrink the network; the
default is the 32/64-filter, 512-unit, 10-class configuration. All convolutions
use same padding, so spatial dims go input -> input/2 -> input/4.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .image import Dataset, Image
from .layers import Conv2D, Dense, Dropout, Flatten, Layer, MaxPool2x2, ReLU

DROPOUT_RATES = (0.25, 0.25, 0.5)


@dataclass(frozen=True)
class Architecture:
    input_size: int = 32
    block_channels: tuple[int, int] = (32, 64)
    dense_units: int = 512
    num_classes: int = 10
    in_channels: int = 3
    kernel: int = 3

    def __post_init__(self):
        if self.input_size < 4 or self.input_size % 4 != 0:
            raise ValueError("input_size must be a positive multiple of 4 (two 2x2 pools)")
        if min(self.block_channels) < 1 or self.dense_units < 1 or self.num_classes < 2:
            raise ValueError("layer widths must be positive, num_classes >= 2")

    @property
    def flat_features(self) -> int:
        return (self.input_size // 4) ** 2 * self.block_channels[1]

    @classmethod
    def reduced(cls, input_size=8, channels=(4, 4), dense_units=32, num_classes=10):
        """Small configuration for gradient checks and fast tests."""
        return cls(input_size, tuple(channels), dense_units, num_classes)


def build_layers(arch: Architecture) -> list[Layer]:
    c1, c2 = arch.block_channels
    return [
        Conv2D(c1, arch.in_channels, arch.kernel), ReLU(),
        Conv2D(c1, c1, arch.kernel), ReLU(),
        MaxPool2x2(), Dropout(DROPOUT_RATES[0]),
        Conv2D(c2, c1, arch.kernel), ReLU(),
        Conv2D(c2, c2, arch.kernel), ReLU(),
        MaxPool2x2(), Dropout(DROPOUT_RATES[1]),
        Flatten(),
        Dense(arch.flat_features, arch.dense_units), Dropout(DROPOUT_RATES[2]),
        Dense(arch.dense_units, arch.num_classes),
    ]


@dataclass(eq=False)
class Network:
    """All weights and biases plus architecture metadata; the whitebox oracle.

    Attacks need only ``loss_and_input_gradient`` and ``predict_probs``; any
    object with those two methods works as a gradient oracle.
    """

    arch: Architecture
    layers: list[Layer]
    step: int = 0
    seed: int = 0

    @property
    def param_arrays(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params]

    @property
    def dtype(self):
        return self.param_arrays[0].dtype

    def copy(self) -> "Network":
        return copy.deepcopy(self)

    def astype(self, dtype) -> "Network":
        net = self.copy()
        for layer in net.layers:
            if isinstance(layer, (Conv2D, Dense)):
                layer.W = layer.W.astype(dtype)
                layer.b = layer.b.astype(dtype)
        return net

    def predict_probs(self, img: Image) -> np.ndarray:
        return forward(self, img)

    def predict(self, img: Image) -> int:
        return int(np.argmax(self.predict_probs(img)))

    def loss_and_input_gradient(self, img: Image, label: int):
        return loss_and_input_gradient(self, img, label)


def init_network(arch: Architecture, seed: int) -> Network:
    """Fan-in-scaled uniform weights (limit sqrt(6/fan_in)), zero biases."""
    rng = np.random.default_rng(seed)
    layers = build_layers(arch)
    for layer in layers:
        if isinstance(layer, Conv2D):
            fan_in = layer.W.shape[1] * layer.W.shape[2] * layer.W.shape[3]
        elif isinstance(layer, Dense):
            fan_in = layer.W.shape[0]
        else:
            continue
        limit = np.sqrt(6.0 / fan_in)
        layer.W = rng.uniform(-limit, limit, size=layer.W.shape).astype(layer.W.dtype)
    return Network(arch, layers, step=0, seed=seed)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _forward_batch(net: Network, x: np.ndarray, train: bool = False, rng=None):
    """Run the stack on an (N, H, W, C) batch; returns (probs, per-layer contexts)."""
    ctxs = []
    for layer in net.layers:
        x, ctx = layer.forward(x, train=train, rng=rng)
        ctxs.append(ctx)
    return _softmax(x), ctxs


def _backward_batch(net: Network, dlogits: np.ndarray, ctxs):
    """Backpropagate d(loss)/d(logits); returns (input gradient, per-param grads)."""
    grads: list[np.ndarray] = []
    dout = dlogits
    for layer, ctx in zip(reversed(net.layers), reversed(ctxs)):
        dout, layer_grads = layer.backward(dout, ctx)
        grads[:0] = layer_grads
    return dout, grads


def _check_input(net: Network, img: Image):
    if (img.height, img.width) != (net.arch.input_size, net.arch.input_size):
        raise DimensionError(
            f"network expects {net.arch.input_size}x{net.arch.input_size} input, "
            f"got {img.height}x{img.width}"
        )


def forward(net: Network, img: Image, mode: str = "infer", rng=None) -> np.ndarray:
    """Class probabilities for one image. Inference mode is deterministic;
    train mode applies dropout (an rng may be supplied, else one is seeded
    from the network's seed)."""
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    _check_input(net, img)
    train = mode == "train"
    if train and rng is None:
        rng = np.random.default_rng(net.seed)
    x = img.data[None].astype(net.dtype)
    probs, _ = _forward_batch(net, x, train=train, rng=rng)
    return probs[0].astype(np.float64)


def forward_many(net: Network, images: list[Image]) -> np.ndarray:
    """Inference-mode probabilities for a list of images, (N, classes)."""
    for img in images:
        _check_input(net, img)
    x = np.stack([img.data for img in images]).astype(net.dtype)
    probs, _ = _forward_batch(net, x)
    return probs.astype(np.float64)


def loss_and_input_gradient(net: Network, img: Image, label: int):
    """Cross-entropy loss and d(loss)/d(input), inference mode (dropout off).

    Returns (loss, gradient) with the gradient shaped like the image.
    """
    _check_input(net, img)
    if not 0 <= label < net.arch.num_classes:
        raise ValueError(f"label {label} out of range [0, {net.arch.num_classes})")
    x = img.data[None].astype(net.dtype)
    probs, ctxs = _forward_batch(net, x)
    p = max(float(probs[0, label]), 1e-300)  # guard the log, not the gradient
    loss = -np.log(p)
    dlogits = probs.copy()
    dlogits[0, label] -= 1.0
    dx, _ = _backward_batch(net, dlogits.astype(net.dtype), ctxs)
    return float(loss), dx[0].astype(np.float64)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 1
    seed: int = 0


def _dataset_arrays(data: Dataset, dtype):
    x = np.stack([it.image.data for it in data.items]).astype(dtype)
    y = np.array([it.label for it in data.items], dtype=np.int64)
    return x, y


def _evaluate_arrays(net: Network, x: np.ndarray, y: np.ndarray, chunk: int = 256):
    losses, correct = [], 0
    for start in range(0, len(x), chunk):
        xs, ys = x[start : start + chunk], y[start : start + chunk]
        probs, _ = _forward_batch(net, xs)
        p = np.clip(probs[np.arange(len(ys)), ys], 1e-300, None)
        losses.append(-np.log(p))
        correct += int((probs.argmax(axis=1) == ys).sum())
    return float(np.concatenate(losses).mean()), correct / len(x)


def train(net: Network, data: Dataset, cfg: TrainConfig):
    """SGD with momentum over shuffled minibatches.

    Update rule per parameter: v <- momentum*v - lr*grad; p <- p + v.
    Deterministic for a fixed cfg.seed: one rng drives both the epoch shuffles
    and the dropout masks, consumed in a fixed order. Returns a trained copy
    of the network and a history with entries for epoch 0 (pre-training
    evaluation) through cfg.epochs, each {"epoch", "loss", "accuracy"} over
    the full training set in inference mode.
    """
    if len(data) == 0:
        raise ValueError("cannot train on an empty dataset")
    if data.items[0].image.height != net.arch.input_size:
        raise DimensionError("dataset image size does not match the architecture")
    if any(it.label >= net.arch.num_classes for it in data.items):
        raise ValueError("dataset label exceeds the network's class count")
    net = net.copy()
    x_all, y_all = _dataset_arrays(data, net.dtype)
    rng = np.random.default_rng(cfg.seed)
    velocity = [np.zeros_like(p) for p in net.param_arrays]

    loss0, acc0 = _evaluate_arrays(net, x_all, y_all)
    history = [{"epoch": 0, "loss": loss0, "accuracy": acc0}]

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(x_all))
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            xb, yb = x_all[batch], y_all[batch]
            probs, ctxs = _forward_batch(net, xb, train=True, rng=rng)
            dlogits = probs.copy()
            dlogits[np.arange(len(yb)), yb] -= 1.0
            dlogits /= len(yb)
            _, grads = _backward_batch(net, dlogits.astype(net.dtype), ctxs)
            for p, g, v in zip(net.param_arrays, grads, velocity):
                v *= cfg.momentum
                v -= cfg.lr * g
                p += v
            net.step += 1
        loss, acc = _evaluate_arrays(net, x_all, y_all)
        history.append({"epoch": epoch, "loss": loss, "accuracy": acc})
    return net, history


def gradient_check(net: Network, img: Image, label: int, h: float = 1e-3) -> float:
    """Max relative error between the analytic input gradient and central
    finite differences over every input coordinate. Runs in float64."""
    net64 = net.astype(np.float64)
    _, analytic = loss_and_input_gradient(net64, img, label)

    base = img.data
    n_coords = base.size
    plus = np.repeat(base[None], n_coords, axis=0)
    minus = plus.copy()
    flat_idx = np.arange(n_coords)
    plus.reshape(n_coords, -1)[flat_idx, flat_idx] += h
    minus.reshape(n_coords, -1)[flat_idx, flat_idx] -= h

    def batch_losses(stack):
        losses = []
        for start in range(0, len(stack), 256):
            probs, _ = _forward_batch(net64, stack[start : start + 256])
            losses.append(-np.log(np.clip(probs[:, label], 1e-300, None)))
        return np.concatenate(losses)

    numeric = (batch_losses(plus) - batch_losses(minus)) / (2.0 * h)
    numeric = numeric.reshape(base.shape)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float((np.abs(analytic - numeric) / denom).max())
