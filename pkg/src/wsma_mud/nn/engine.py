"""Forward and backward passes, heads and cross-entropy losses.

Losses use base-2 logarithms and average over the batch. Probabilities are
clamped to ``[1e-12, 1 - 1e-12]`` inside the logarithms.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DimensionError, StaleCacheError

BN_EPS = 1e-5
BN_MOMENTUM = 0.99
PROB_CLAMP = 1e-12
_LN2 = np.log(2.0)
_cache_ids = itertools.count()


@dataclass
class ForwardCache:
    mode: str
    params_id: int
    params_version: int
    layer_caches: list
    outputs: np.ndarray
    token: int


def softmax(d):
    e = np.exp(d - d.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def sigmoid(d):
    # split by sign to avoid overflow in exp
    out = np.empty_like(d, dtype=float)
    pos = d >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    e = np.exp(d[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def relu(d):
    return np.maximum(d, 0.0)


def _conv_forward(x, W, b):
    kh, kw, c, f = W.shape
    win = sliding_window_view(x, (kh, kw), axis=(1, 2))  # (N, Ho, Wo, C, kh, kw)
    n, ho, wo = win.shape[:3]
    cols = win.reshape(n * ho * wo, c * kh * kw)
    Wmat = W.transpose(2, 0, 1, 3).reshape(c * kh * kw, f)
    out = (cols @ Wmat).reshape(n, ho, wo, f) + b
    return out, cols


def _conv_backward(dout, x_shape, cols, W):
    kh, kw, c, f = W.shape
    n, ho, wo, _ = dout.shape
    d2 = dout.reshape(-1, f)
    dW = (cols.T @ d2).reshape(c, kh, kw, f).transpose(1, 2, 0, 3)
    db = d2.sum(axis=0)
    dx = np.zeros(x_shape)
    for i in range(kh):
        for j in range(kw):
            dx[:, i:i + ho, j:j + wo, :] += dout @ W[i, j].T
    return dx, dW, db


def _bn_axes(x):
    return tuple(range(x.ndim - 1))


def forward(spec, params, batch, mode="infer"):
    """Run the network on ``batch``; returns ``(outputs, cache)``.

    In ``"train"`` mode batch normalization uses batch statistics and updates
    the running statistics held in ``params.bn_state``; in ``"infer"`` mode it
    uses the running statistics and nothing is modified.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    x = np.asarray(batch, dtype=float)
    if x.shape[1:] != spec.input_shape:
        raise DimensionError(f"batch shape {x.shape[1:]} does not match input {spec.input_shape}")
    train = mode == "train"
    if train and x.shape[0] < 2:
        raise DimensionError("train-mode forward needs a batch of at least 2 samples")
    caches = []
    for i, layer in enumerate(spec.layers):
        kind = layer.kind
        if kind == "dense":
            caches.append(x)
            x = x @ params[f"{i}.W"] + params[f"{i}.b"]
        elif kind == "conv2d":
            out, cols = _conv_forward(x, params[f"{i}.W"], params[f"{i}.b"])
            caches.append((x.shape, cols))
            x = out
        elif kind == "batch_norm":
            gamma, beta = params[f"{i}.gamma"], params[f"{i}.beta"]
            rm = params.bn_state[f"{i}.running_mean"]
            rv = params.bn_state[f"{i}.running_var"]
            if train:
                axes = _bn_axes(x)
                mu = x.mean(axis=axes)
                var = x.var(axis=axes)
                inv_std = 1.0 / np.sqrt(var + BN_EPS)
                xhat = (x - mu) * inv_std
                rm *= BN_MOMENTUM
                rm += (1 - BN_MOMENTUM) * mu
                rv *= BN_MOMENTUM
                rv += (1 - BN_MOMENTUM) * var
                caches.append((xhat, inv_std))
            else:
                xhat = (x - rm) / np.sqrt(rv + BN_EPS)
                caches.append(None)
            x = gamma * xhat + beta
        elif kind == "relu":
            caches.append(x > 0)
            x = relu(x)
        elif kind == "flatten":
            caches.append(x.shape)
            x = x.reshape(x.shape[0], -1)
        elif kind == "head":
            caches.append(None)
            x = softmax(x) if layer.activation == "softmax" else sigmoid(x)
    cache = ForwardCache(mode=mode, params_id=id(params), params_version=params.version,
                         layer_caches=caches, outputs=x, token=next(_cache_ids))
    return x, cache


def _clamp(p):
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)


def loss_categorical_ce(theta, theta_tilde):
    """Batch mean of ``-sum_m theta_m log2(theta_tilde_m)``."""
    theta = np.asarray(theta, dtype=float)
    theta_tilde = np.asarray(theta_tilde, dtype=float)
    if theta.shape != theta_tilde.shape:
        raise DimensionError(f"labels {theta.shape} vs outputs {theta_tilde.shape}")
    per_sample = -np.sum(theta * np.log2(_clamp(theta_tilde)), axis=-1)
    return float(np.mean(per_sample))


def loss_binary_ce(theta, theta_tilde):
    """Batch mean of the per-sample sum of bitwise binary cross entropies (log2)."""
    theta = np.asarray(theta, dtype=float)
    theta_tilde = np.asarray(theta_tilde, dtype=float)
    if theta.shape != theta_tilde.shape:
        raise DimensionError(f"labels {theta.shape} vs outputs {theta_tilde.shape}")
    p = _clamp(theta_tilde)
    per_sample = -np.sum(theta * np.log2(p) + (1 - theta) * np.log2(1 - p), axis=-1)
    return float(np.mean(per_sample))


def loss_for_head(head):
    return loss_categorical_ce if head == "softmax" else loss_binary_ce


def backward(spec, params, cache, theta, out=None):
    """Gradients of the batch loss with respect to every trainable tensor.

    The loss is the one matching the head (categorical CE for softmax,
    binary CE for sigmoid). Returns a :class:`FlatTensors` with the same
    layout as ``params``; pass ``out`` to reuse an existing one.
    """
    if cache.mode != "train":
        raise StaleCacheError("backward needs a train-mode forward cache")
    if cache.params_id != id(params) or cache.params_version != params.version:
        raise StaleCacheError("parameters changed since the forward pass")
    theta = np.asarray(theta, dtype=float)
    probs = cache.outputs
    if theta.shape != probs.shape:
        raise DimensionError(f"labels {theta.shape} vs outputs {probs.shape}")
    grads = params.zeros_like() if out is None else out
    # softmax+CE and sigmoid+BCE share the same pre-activation gradient
    dx = (probs - theta) / (probs.shape[0] * _LN2)
    for i in range(len(spec.layers) - 2, -1, -1):
        layer = spec.layers[i]
        c = cache.layer_caches[i]
        kind = layer.kind
        if kind == "dense":
            W = params[f"{i}.W"]
            np.matmul(c.T, dx, out=grads[f"{i}.W"])
            grads[f"{i}.b"][...] = dx.sum(axis=0)
            dx = dx @ W.T
        elif kind == "conv2d":
            x_shape, cols = c
            dx, dW, db = _conv_backward(dx, x_shape, cols, params[f"{i}.W"])
            grads[f"{i}.W"][...] = dW
            grads[f"{i}.b"][...] = db
        elif kind == "batch_norm":
            xhat, inv_std = c
            axes = _bn_axes(dx)
            m = dx.size // dx.shape[-1]
            grads[f"{i}.beta"][...] = dx.sum(axis=axes)
            grads[f"{i}.gamma"][...] = (dx * xhat).sum(axis=axes)
            dxhat = dx * params[f"{i}.gamma"]
            dx = (inv_std / m) * (m * dxhat - dxhat.sum(axis=axes)
                                  - xhat * (dxhat * xhat).sum(axis=axes))
        elif kind == "relu":
            dx = dx * c
        elif kind == "flatten":
            dx = dx.reshape(c)
    return grads
