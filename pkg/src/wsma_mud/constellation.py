"""Square QAM alphabets, the joint symbol grid and nearest-symbol slicing."""

from dataclasses import dataclass

import numpy as np

SUPPORTED_ORDERS = (4, 16, 64)


@dataclass(frozen=True, eq=False)
class QamAlphabet:
    """Normalized square M-QAM alphabet.

    Symbols are ordered real-part descending, then imaginary-part descending,
    so for ``M=4`` the order is ``(1+j, 1-j, -1+j, -1-j)``. The mean symbol
    energy equals ``log2(M)``.
    """

    M: int
    symbols: np.ndarray

    @property
    def bits_per_symbol(self):
        return int(np.log2(self.M))

    @property
    def energy(self):
        """Average symbol energy (equal to ``log2(M)``)."""
        return float(np.mean(np.abs(self.symbols) ** 2))

    @property
    def min_distance(self):
        d = np.abs(self.symbols[:, None] - self.symbols[None, :])
        return float(d[~np.eye(self.M, dtype=bool)].min())

    def __len__(self):
        return self.M


def build_qam(M):
    """Build the normalized square QAM alphabet of order ``M``."""
    if M not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported QAM order {M}; expected one of {SUPPORTED_ORDERS}")
    side = int(round(np.sqrt(M)))
    levels = np.arange(side - 1, -side, -2, dtype=float)
    re, im = np.meshgrid(levels, levels, indexing="ij")
    symbols = (re + 1j * im).ravel()
    symbols *= np.sqrt(np.log2(M) / np.mean(np.abs(symbols) ** 2))
    symbols.setflags(write=False)
    return QamAlphabet(M=M, symbols=symbols)


@dataclass(frozen=True, eq=False)
class SymbolGrid:
    """All ``M**K`` joint transmit vectors in lexicographic order.

    ``indices[n]`` holds the per-UE alphabet indices of entry ``n`` (UE 1 is
    the most significant digit) and ``entries[n]`` the symbol values.
    """

    K: int
    alphabet: QamAlphabet
    indices: np.ndarray
    entries: np.ndarray

    def __len__(self):
        return len(self.entries)

    def joint_index(self, symbol_indices):
        """Grid index of per-UE alphabet indices (works on trailing axis)."""
        symbol_indices = np.asarray(symbol_indices)
        weights = self.alphabet.M ** np.arange(self.K - 1, -1, -1)
        return symbol_indices @ weights

    def locate(self, x, atol=1e-9):
        """Grid index of a joint symbol vector given by value."""
        dist = np.max(np.abs(self.entries - np.asarray(x)[None, :]), axis=1)
        n = int(np.argmin(dist))
        if dist[n] > atol:
            raise ValueError("vector is not a member of the symbol grid")
        return n


def enumerate_symbol_grid(K, alphabet):
    """Enumerate the joint symbol set for ``K`` UEs."""
    if K < 1:
        raise ValueError("K must be at least 1")
    M = alphabet.M
    n = np.arange(M**K)
    # base-M digits, UE 1 slowest-varying
    digits = (n[:, None] // M ** np.arange(K - 1, -1, -1)[None, :]) % M
    entries = alphabet.symbols[digits]
    digits.setflags(write=False)
    entries.setflags(write=False)
    return SymbolGrid(K=K, alphabet=alphabet, indices=digits, entries=entries)


def slice_to_nearest(value, alphabet):
    """Index of the nearest alphabet symbol; smallest index on ties.

    ``value`` may be a scalar or an array; the result has the same shape.
    """
    value = np.asarray(value)
    dist = np.abs(value[..., None] - alphabet.symbols)
    idx = np.argmin(dist, axis=-1)
    return int(idx) if idx.ndim == 0 else idx
