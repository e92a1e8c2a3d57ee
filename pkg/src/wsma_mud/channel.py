"""Spread MU-SIMO uplink channel.

Per-UE fading vectors are stored as arrays of shape ``(K, Nr, L)`` (with
optional leading batch axes). The effective channel stacks antenna blocks
antenna-major: row ``r * L + l`` of column ``k`` is ``h[k, r, l] * s_k[l]``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .numerics import sample_complex_gaussian


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Propagation channels ``h[..., k, r, :]`` for every UE and antenna."""

    h: np.ndarray
    sigma2_h: float

    @property
    def K(self):
        return self.h.shape[-3]

    @property
    def Nr(self):
        return self.h.shape[-2]

    @property
    def L(self):
        return self.h.shape[-1]

    @property
    def variance_per_complex_dim(self):
        return self.sigma2_h / 2

    def stacked(self):
        """Per-UE propagation-channel stacks, shape ``(..., K, Nr*L)``."""
        return self.h.reshape(self.h.shape[:-2] + (self.Nr * self.L,))


@dataclass(frozen=True, eq=False)
class EffectiveChannel:
    """Effective channel matrix ``H_eff`` of shape ``(..., L*Nr, K)``."""

    H: np.ndarray

    @property
    def K(self):
        return self.H.shape[-1]

    def column(self, k):
        return self.H[..., :, k]


@dataclass(frozen=True, eq=False)
class ReceivedFrame:
    y: np.ndarray
    true_symbols: np.ndarray
    noise_variance: float


def default_channel_variance(L, Nr):
    """Channel variance giving unit average received energy per UE."""
    return 1.0 / (L * Nr)


def sample_channels(K, Nr, L, sigma2_h, stream, batch=()):
    """Draw i.i.d. CN(0, sigma2_h) fading for all UEs, antennas and REs."""
    if sigma2_h < 0:
        raise ValueError("sigma2_h must be non-negative")
    batch = (batch,) if np.isscalar(batch) else tuple(batch)
    h = sample_complex_gaussian(stream, None, sigma2_h, size=batch + (K, Nr, L))
    return ChannelRealization(h=h, sigma2_h=float(sigma2_h))


def effective_channel(ch, S):
    """Element-wise spread each UE's fading and stack the antenna blocks."""
    cols = S.columns
    if ch.L != cols.shape[0] or ch.K != cols.shape[1]:
        raise DimensionError(
            f"channel (K={ch.K}, L={ch.L}) does not match sequences "
            f"(K={cols.shape[1]}, L={cols.shape[0]})")
    # h[..., k, r, l] * s[l, k] -> (..., K, Nr, L)
    spread = ch.h * cols.T[:, None, :]
    stacked = spread.reshape(spread.shape[:-2] + (ch.Nr * ch.L,))
    return EffectiveChannel(H=np.swapaxes(stacked, -1, -2))


def transmit(x, Heff, sigma2_z, stream):
    """``y = H_eff x + z`` with z ~ CN(0, sigma2_z I)."""
    x = np.asarray(x)
    if x.shape[-1] != Heff.K:
        raise DimensionError(f"expected {Heff.K} symbols, got {x.shape[-1]}")
    clean = np.einsum("...nk,...k->...n", Heff.H, x)
    z = sample_complex_gaussian(stream, None, sigma2_z, size=clean.shape)
    return ReceivedFrame(y=clean + z, true_symbols=x, noise_variance=float(sigma2_z))


def snr_to_noise_variance(snr_db, L=None, Nr=None, per_re=False):
    """Noise variance for an SNR given in dB.

    By default ``snr_db`` is the per-UE SNR ``1/sigma2_z`` summed over the
    ``L*Nr`` resource elements. With ``per_re=True`` it is instead the
    per-RE, per-antenna SNR ``1/(L*Nr*sigma2_z)``, which needs ``L`` and ``Nr``.
    """
    inv = 10.0 ** (-float(snr_db) / 10.0)
    if per_re:
        if L is None or Nr is None:
            raise ValueError("per_re conversion needs L and Nr")
        return inv / (L * Nr)
    return inv


@dataclass(frozen=True, eq=False)
class LinkSetup:
    """Everything fixed for a link: dimensions, alphabet, grid and sequences."""

    K: int
    L: int
    Nr: int
    alphabet: object
    grid: object
    sequences: object
    sigma2_h: float

    @property
    def M(self):
        return self.alphabet.M

    @property
    def N(self):
        return self.L * self.Nr

    def sample(self, stream, batch):
        """Channels and effective channels for ``batch`` independent frames."""
        ch = sample_channels(self.K, self.Nr, self.L, self.sigma2_h, stream, batch)
        return ch, effective_channel(ch, self.sequences)


def make_link(K, L, Nr, M, sequences, sigma2_h=None):
    from .constellation import build_qam, enumerate_symbol_grid

    if sequences.K != K or sequences.L != L:
        raise DimensionError(f"sequences are {sequences.L}x{sequences.K}, link needs {L}x{K}")
    alphabet = build_qam(M)
    return LinkSetup(K=K, L=L, Nr=Nr, alphabet=alphabet, grid=enumerate_symbol_grid(K, alphabet),
                     sequences=sequences,
                     sigma2_h=default_channel_variance(L, Nr) if sigma2_h is None else sigma2_h)
