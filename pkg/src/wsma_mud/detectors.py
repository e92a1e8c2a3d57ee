"""Model-based multiuser detectors: ML, MF, MF-PIC and joint MMSE.

Every detector accepts a single frame (``y`` of shape ``(N,)``, ``H`` of
shape ``(N, K)``) or a stack of frames with matching leading axes, where
``N = L * Nr``. ``H`` is the effective channel, either an
:class:`~wsma_mud.channel.EffectiveChannel` or a raw array.
"""

from dataclasses import dataclass

import numpy as np

from .constellation import slice_to_nearest
from .errors import DimensionError
from .numerics import solve_hermitian_system

_ML_CHUNK = 2048


@dataclass(frozen=True, eq=False)
class DetectionResult:
    """Detector decisions.

    ``symbol_indices`` are per-UE alphabet indices (last axis K),
    ``joint_index`` the corresponding symbol-grid index and ``metric`` the
    squared residual ``||y - H x_hat||^2`` of the decision.
    """

    symbol_indices: np.ndarray
    joint_index: np.ndarray
    metric: np.ndarray


def _as_matrix(Heff):
    return np.asarray(getattr(Heff, "H", Heff))


def _check(y, H):
    if y.shape[-1] != H.shape[-2] or y.shape[:-1] != H.shape[:-2]:
        raise DimensionError(f"y {y.shape} incompatible with H_eff {H.shape}")


def _residual(y, H, x):
    return np.sum(np.abs(y - np.einsum("...nk,...k->...n", H, x)) ** 2, axis=-1)


def _result(y, H, idx, alphabet):
    M = alphabet.M
    K = idx.shape[-1]
    joint = idx @ (M ** np.arange(K - 1, -1, -1))
    metric = _residual(y, H, alphabet.symbols[idx])
    return DetectionResult(symbol_indices=idx, joint_index=joint, metric=metric)


def detect_ml(y, Heff, grid):
    """Exhaustive search for the joint symbol minimizing the residual norm."""
    y = np.asarray(y)
    H = _as_matrix(Heff)
    _check(y, H)
    if H.shape[-1] != grid.K:
        raise DimensionError(f"grid has K={grid.K}, channel has K={H.shape[-1]}")
    single = y.ndim == 1
    yb = y.reshape(-1, y.shape[-1])
    Hb = H.reshape((-1,) + H.shape[-2:])
    best = np.empty(len(yb), dtype=int)
    metric = np.empty(len(yb))
    cand = grid.entries.T  # (K, G)
    for start in range(0, len(yb), _ML_CHUNK):
        sl = slice(start, start + _ML_CHUNK)
        r = yb[sl, :, None] - Hb[sl] @ cand
        d = np.einsum("tng,tng->tg", r.real, r.real) + np.einsum("tng,tng->tg", r.imag, r.imag)
        best[sl] = np.argmin(d, axis=1)  # first minimum = smallest index
        metric[sl] = d[np.arange(d.shape[0]), best[sl]]
    shape = y.shape[:-1]
    idx = grid.indices[best].reshape(shape + (grid.K,))
    if single:
        return DetectionResult(symbol_indices=idx, joint_index=int(best[0]), metric=float(metric[0]))
    return DetectionResult(symbol_indices=idx, joint_index=best.reshape(shape),
                           metric=metric.reshape(shape))


def _mf_statistic(y, H, energy):
    # h_k^H y / ||h_k||^2 for every k
    return np.einsum("...nk,...n->...k", H.conj(), y) / energy


def _column_energy(H):
    energy = np.sum(np.abs(H) ** 2, axis=-2)
    if np.any(energy == 0):
        raise DimensionError("zero-norm effective channel column")
    return energy


def detect_mf(y, Heff, alphabet):
    """Per-UE matched filter, normalized by the channel energy, then slicing."""
    y = np.asarray(y)
    H = _as_matrix(Heff)
    _check(y, H)
    idx = slice_to_nearest(_mf_statistic(y, H, _column_energy(H)), alphabet)
    return _finish(y, H, np.asarray(idx), alphabet)


def detect_mf_pic(y, Heff, alphabet, iterations=3):
    """Matched filter followed by ``iterations`` parallel hard-IC passes.

    In every pass each UE subtracts the interference reconstructed from the
    previous pass's decisions of all other UEs, then re-applies its matched
    filter and slices.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    y = np.asarray(y)
    H = _as_matrix(Heff)
    _check(y, H)
    energy = _column_energy(H)
    idx = slice_to_nearest(_mf_statistic(y, H, energy), alphabet)
    for _ in range(iterations):
        x_hat = alphabet.symbols[idx]
        total = np.einsum("...nk,...k->...n", H, x_hat)
        # y - sum_{j != k} h_j x_j = (y - total) + h_k x_k
        stat = _mf_statistic(y - total, H, energy) + x_hat
        idx = slice_to_nearest(stat, alphabet)
    return _finish(y, H, np.asarray(idx), alphabet)


def detect_mmse(y, Heff, sigma2_z, alphabet):
    """Joint linear MMSE equalizer followed by per-UE slicing."""
    y = np.asarray(y)
    H = _as_matrix(Heff)
    _check(y, H)
    K = H.shape[-1]
    Hh = np.swapaxes(H, -1, -2).conj()
    gram = Hh @ H + (sigma2_z / alphabet.energy) * np.eye(K)
    x_tilde = solve_hermitian_system(gram, np.einsum("...kn,...n->...k", Hh, y))
    idx = slice_to_nearest(x_tilde, alphabet)
    return _finish(y, H, np.asarray(idx), alphabet)


def _finish(y, H, idx, alphabet):
    res = _result(y, H, idx, alphabet)
    if y.ndim == 1:
        return DetectionResult(symbol_indices=res.symbol_indices, joint_index=int(res.joint_index),
                               metric=float(res.metric))
    return res
