"""Symbol-grid index <-> NN label vectors.

Two label modes:

``multiclass_softmax``
    One-hot labels of length ``M**K``; grid entry ``n`` (0-based) is hot at
    position ``M**K - 1 - n``, so the first joint symbol maps to a 1 in the
    last position.
``multilabel_sigmoid``
    Concatenation of K per-UE codes, each the big-endian ``log2(M)``-bit
    binary of the UE's alphabet index; length ``K * log2(M)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .numerics import argmax_with_tie_break

MULTICLASS = "multiclass_softmax"
MULTILABEL = "multilabel_sigmoid"
MODES = (MULTICLASS, MULTILABEL)

# short aliases accepted on the command line and in configs
_ALIASES = {"softmax": MULTICLASS, "sigmoid": MULTILABEL, MULTICLASS: MULTICLASS,
            MULTILABEL: MULTILABEL}


def canonical_mode(mode):
    try:
        return _ALIASES[mode]
    except KeyError:
        raise ValueError(f"unknown label mode {mode!r}; expected one of {sorted(_ALIASES)}") from None


@dataclass(frozen=True, eq=False)
class LabelCodebook:
    mode: str
    M: int
    K: int
    labels: np.ndarray  # (M**K, n_label), row n is the label of grid entry n

    @property
    def n_label(self):
        return self.labels.shape[1]

    @property
    def head(self):
        return "softmax" if self.mode == MULTICLASS else "sigmoid"

    @property
    def bits_per_symbol(self):
        return int(np.log2(self.M))


def build_codebook(mode, M, K):
    mode = canonical_mode(mode)
    if M < 2 or M & (M - 1):
        raise ValueError(f"M must be a power of two, got {M}")
    if K < 1:
        raise ValueError("K must be at least 1")
    size = M**K
    n = np.arange(size)
    if mode == MULTICLASS:
        labels = np.zeros((size, size), dtype=np.int8)
        labels[n, size - 1 - n] = 1
    else:
        bits = int(np.log2(M)) * K
        # the concatenated per-UE codes are exactly the binary expansion of n
        labels = ((n[:, None] >> np.arange(bits - 1, -1, -1)) & 1).astype(np.int8)
    labels.setflags(write=False)
    return LabelCodebook(mode=mode, M=M, K=K, labels=labels)


def encode(codebook, n):
    """Label vector(s) of grid index ``n`` (scalar or array)."""
    n = np.asarray(n)
    if np.any(n < 0) or np.any(n >= len(codebook.labels)):
        raise IndexError(f"grid index out of range [0, {len(codebook.labels)})")
    return codebook.labels[n]


def hard_decide(codebook, theta_tilde):
    """Binary label estimate from network outputs (last axis = labels).

    Softmax: one-hot at the arg-max, smallest index on ties.
    Sigmoid: element-wise, ``<= 0.5`` maps to 0.
    """
    theta_tilde = np.asarray(theta_tilde)
    if theta_tilde.shape[-1] != codebook.n_label:
        raise DimensionError(f"expected {codebook.n_label} outputs, got {theta_tilde.shape[-1]}")
    if codebook.mode == MULTILABEL:
        return (theta_tilde > 0.5).astype(np.int8)
    if theta_tilde.ndim == 1:
        hot = argmax_with_tie_break(theta_tilde)
    else:
        hot = np.argmax(theta_tilde, axis=-1)
    out = np.zeros(theta_tilde.shape, dtype=np.int8)
    np.put_along_axis(out, np.expand_dims(np.asarray(hot), -1), 1, axis=-1)
    return out


def decode(codebook, theta_hat):
    """Grid index of a binary label (or a stack of labels)."""
    theta_hat = np.asarray(theta_hat)
    if theta_hat.shape[-1] != codebook.n_label:
        raise DimensionError(f"expected {codebook.n_label} label bits, got {theta_hat.shape[-1]}")
    size = len(codebook.labels)
    if codebook.mode == MULTICLASS:
        if np.any(theta_hat.sum(axis=-1) != 1):
            raise ValueError("multiclass label must have exactly one 1")
        n = size - 1 - np.argmax(theta_hat, axis=-1)
    else:
        weights = 1 << np.arange(codebook.n_label - 1, -1, -1)
        n = theta_hat.astype(np.int64) @ weights
    return int(n) if np.ndim(n) == 0 else n
