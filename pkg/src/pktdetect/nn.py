"""Minimal neural-network engine: 1D convolution, dense layers, ReLU, MSE
loss, backpropagation and Adam.  No external learning framework; everything
runs in double precision on numpy arrays shaped [batch, ...].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Layer:
    """Base class; layers cache what backward() needs during forward()."""

    params: list
    grads: list

    def __init__(self):
        self.params = []
        self.grads = []

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Conv1d(Layer):
    """Valid (no padding), stride-1 cross-correlation: [B,C,T] -> [B,O,T-F+1]."""

    def __init__(self, ch_in: int, ch_out: int, filter_len: int,
                 rng: np.random.Generator | None = None):
        super().__init__()
        if filter_len < 1:
            raise ValueError("filter_len must be >= 1")
        rng = rng or np.random.default_rng(0)
        fan_in = ch_in * filter_len
        limit = np.sqrt(6.0 / fan_in)  # He-uniform, ReLU follows
        self.w = rng.uniform(-limit, limit, size=(ch_out, ch_in, filter_len))
        self.b = np.zeros(ch_out)
        self.params = [self.w, self.b]
        self.grads = [np.zeros_like(self.w), np.zeros_like(self.b)]
        self._windows = None

    def forward(self, x):
        if x.ndim != 3 or x.shape[1] != self.w.shape[1]:
            raise ValueError("input must be [batch, ch_in, T]")
        F = self.w.shape[2]
        if x.shape[2] < F:
            raise ValueError("input shorter than the filter")
        self._windows = sliding_window_view(x, F, axis=2)  # [B, C, K, F]
        return (np.einsum("ocf,bckf->bok", self.w, self._windows, optimize=True)
                + self.b[None, :, None])

    def backward(self, grad_out):
        F = self.w.shape[2]
        self.grads[0][...] = np.einsum("bok,bckf->ocf", grad_out, self._windows,
                                       optimize=True)
        self.grads[1][...] = grad_out.sum(axis=(0, 2))
        padded = np.pad(grad_out, ((0, 0), (0, 0), (F - 1, F - 1)))
        g_windows = sliding_window_view(padded, F, axis=2)  # [B, O, T, F]
        return np.einsum("ocf,botf->bct", self.w[:, :, ::-1], g_windows,
                         optimize=True)


class Dense(Layer):
    """Affine layer: [B, N_i] -> [B, N_o]."""

    def __init__(self, n_in: int, n_out: int, init: str = "he",
                 rng: np.random.Generator | None = None):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        if init == "he":
            limit = np.sqrt(6.0 / n_in)
        elif init == "xavier":
            limit = np.sqrt(6.0 / (n_in + n_out))
        else:
            raise ValueError(f"unknown init {init!r}")
        self.w = rng.uniform(-limit, limit, size=(n_out, n_in))
        self.b = np.zeros(n_out)
        self.params = [self.w, self.b]
        self.grads = [np.zeros_like(self.w), np.zeros_like(self.b)]
        self._x = None

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.w.shape[1]:
            raise ValueError("input must be [batch, n_in]")
        self._x = x
        return x @ self.w.T + self.b

    def backward(self, grad_out):
        self.grads[0][...] = grad_out.T @ self._x
        self.grads[1][...] = grad_out.sum(axis=0)
        return grad_out @ self.w


class Relu(Layer):
    def __init__(self):
        super().__init__()
        self._mask = None

    def forward(self, x):
        self._mask = x > 0
        return x * self._mask

    def backward(self, grad_out):
        return grad_out * self._mask


class Flatten(Layer):
    def __init__(self):
        super().__init__()
        self._shape = None

    def forward(self, x):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out):
        return grad_out.reshape(self._shape)


class Sequential:
    def __init__(self, layers: list[Layer]):
        self.layers = layers

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            grad_out = layer.backward(grad_out)
        return grad_out

    @property
    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params]

    @property
    def grads(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads]


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient w.r.t. pred."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError("pred and target must have equal shapes")
    n = pred.size
    diff = pred - target
    return float(np.sum(diff ** 2) / n), 2.0 * diff / n


class Adam:
    """Adam with bias correction; parameters updated in place."""

    def __init__(self, params: list[np.ndarray], alpha: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.alpha = alpha
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ValueError("gradient list does not match parameter list")
        for g in grads:
            if not np.all(np.isfinite(g)):
                raise ValueError("non-finite gradient: step rejected")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g ** 2
            p -= self.alpha * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 80
    epochs: int = 400
    alpha: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def train(model: Sequential, inputs: np.ndarray, targets: np.ndarray,
          cfg: TrainConfig,
          val: tuple[np.ndarray, np.ndarray] | None = None) -> dict:
    """Seeded mini-batch training loop; deterministic given cfg.seed.

    Returns {"train_loss": [...], "val_loss": [...]} with one entry per
    epoch (val_loss is empty when no validation set is given).
    """
    n = len(inputs)
    if n == 0:
        raise ValueError("dataset must be non-empty")
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(model.params, cfg.alpha, cfg.beta1, cfg.beta2, cfg.eps)
    history = {"train_loss": [], "val_loss": []}
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, cfg.batch_size):
            idx = perm[lo:lo + cfg.batch_size]
            pred = model.forward(inputs[idx])[:, 0]
            loss, grad = mse_loss(pred, targets[idx])
            model.backward(grad[:, None])
            opt.step(model.grads)
            total += loss * len(idx)
        history["train_loss"].append(total / n)
        if val is not None:
            vp = model.forward(val[0])[:, 0]
            vloss, _ = mse_loss(vp, val[1])
            history["val_loss"].append(vloss)
    return history
