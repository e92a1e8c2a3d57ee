"""Signature-sequence sets: correlation metrics, WBE and Grassmann design.

A sequence set is an ``L x K`` complex matrix whose unit-norm columns are the
per-UE spreading vectors. Both designs run projected gradient descent on the
product of unit spheres, from several random starts drawn from independent
child streams; the best start wins (lowest metric, then lowest start index).
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConvergenceError, DimensionError, FormatError
from .numerics import as_stream, sample_complex_gaussian

FORMAT_HEADER = "# wsma-sequences v1"


def _normalize_columns(S):
    return S / np.linalg.norm(S, axis=0, keepdims=True)


def _gram(S):
    return S.conj().T @ S


@dataclass(frozen=True, eq=False)
class SignatureMatrix:
    """Spread matrix with unit-norm columns.

    ``coherence_defined`` is False for a single sequence, in which case
    :attr:`coherence` is reported as 0.
    """

    columns: np.ndarray
    coherence_defined: bool = field(init=False)

    def __post_init__(self):
        cols = np.array(self.columns, dtype=complex)
        if cols.ndim != 2:
            raise DimensionError("signature matrix must be 2-D (L x K)")
        cols.setflags(write=False)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "coherence_defined", cols.shape[1] >= 2)

    @property
    def L(self):
        return self.columns.shape[0]

    @property
    def K(self):
        return self.columns.shape[1]

    @property
    def overloading_factor(self):
        return self.K / self.L

    @property
    def tsc(self):
        return tsc(self)

    @property
    def coherence(self):
        return coherence(self) if self.coherence_defined else 0.0

    def correlations(self):
        """Matrix of ``|s_k^H s_j|``."""
        return np.abs(_gram(self.columns))


def tsc(S):
    """Total squared correlation, summed over all ordered pairs incl. k=j."""
    cols = S.columns if isinstance(S, SignatureMatrix) else np.asarray(S)
    return float(np.sum(np.abs(_gram(cols)) ** 2))


def coherence(S):
    """Largest off-diagonal ``|s_k^H s_j|``."""
    cols = S.columns if isinstance(S, SignatureMatrix) else np.asarray(S)
    K = cols.shape[1]
    if K < 2:
        raise DimensionError("coherence needs at least two sequences")
    corr = np.abs(_gram(cols))
    return float(corr[~np.eye(K, dtype=bool)].max())


def equiangular_spread(S):
    """max - min of the off-diagonal correlation magnitudes."""
    corr = S.correlations()
    off = corr[~np.eye(S.K, dtype=bool)]
    return float(off.max() - off.min())


def welch_bound(K, L):
    """Lower bound ``K**2 / L`` on the TSC of K unit vectors in C^L."""
    if K < L or L < 1:
        raise ValueError(f"need K >= L >= 1, got K={K}, L={L}")
    return K * K / L


def coherence_lower_bound(K, L):
    """Lower bound on the coherence of K unit vectors in C^L.

    Welch bound for ``K <= L**2``, orthoplex bound ``1/sqrt(L)`` beyond.
    """
    if K <= L:
        return 0.0
    if K <= L * L:
        return float(np.sqrt((K - L) / (L * (K - 1))))
    return float(1.0 / np.sqrt(L))


def _check_dims(K, L):
    if L < 2 or K < L:
        raise ValueError(f"need K >= L >= 2, got K={K}, L={L}")


def _random_start(stream, L, K):
    return _normalize_columns(sample_complex_gaussian(stream, None, 2.0, size=(L, K)))


def _tangent(S, grad):
    # remove the component along each column (sphere tangent space)
    return grad - S * np.sum(S.conj() * grad, axis=0).real


def _descend_tsc(S, K, L, tol, max_iter, step):
    bound = K * K / L
    for _ in range(max_iter):
        value = tsc(S)
        if value - bound <= tol:
            break
        S = _normalize_columns(S - step * _tangent(S, S @ _gram(S)))
    return S, tsc(S)


def generate_wbe(K, L, stream, tol=1e-10, max_iter=10_000, restarts=4, step=0.1):
    """Sequence set whose TSC meets the Welch bound within ``tol``.

    Raises :class:`ConvergenceError` (with ``best_value``) if no start gets
    within ``tol`` of ``K**2 / L`` inside ``max_iter`` iterations.
    """
    _check_dims(K, L)
    stream = as_stream(stream)
    bound = welch_bound(K, L)
    best = None
    for r in range(restarts):
        S, value = _descend_tsc(_random_start(stream.child(r), L, K), K, L, tol, max_iter, step)
        if best is None or value < best[1]:
            best = (S, value)
        if value - bound <= tol:
            break
    S, value = best
    if value - bound > tol:
        raise ConvergenceError(
            f"TSC {value:.12g} not within {tol} of Welch bound {bound}",
            best_value=value, best=SignatureMatrix(S))
    return SignatureMatrix(S)


def _descend_coherence(S, K, temperatures, iters_per_temperature, step):
    off = ~np.eye(K, dtype=bool)
    for t in temperatures:
        for _ in range(iters_per_temperature):
            G = _gram(S)
            A = np.abs(G) ** 2
            # log-sum-exp weights over off-diagonal pairs
            W = np.zeros_like(A)
            W[off] = np.exp(t * (A[off] - A[off].max()))
            W /= W.sum()
            S = _normalize_columns(S - step * _tangent(S, S @ (W * G)))
    return S


def generate_grassmann(K, L, stream, tol=1e-3, max_iter=10_000, restarts=8, step=0.2,
                       n_temperatures=40):
    """Sequence set with (near-)minimal worst-case coherence.

    Minimizes a log-sum-exp surrogate of the largest squared correlation
    while the temperature rises geometrically from 5 to 5000. A start is
    accepted once its coherence is within ``tol`` of the analytic lower bound
    (:func:`coherence_lower_bound`); otherwise :class:`ConvergenceError` is
    raised carrying the best set found.
    """
    _check_dims(K, L)
    stream = as_stream(stream)
    target = coherence_lower_bound(K, L)
    if K == L:
        # orthonormal basis attains zero coherence
        q, _ = np.linalg.qr(_random_start(stream.child(0), L, K))
        return SignatureMatrix(q)
    temperatures = np.geomspace(5.0, 5000.0, n_temperatures)
    per_temperature = max(1, max_iter // n_temperatures)
    best = None
    for r in range(restarts):
        S = _descend_coherence(_random_start(stream.child(r), L, K), K, temperatures,
                               per_temperature, step)
        mu = coherence(S)
        if best is None or mu < best[1]:
            best = (S, mu)
        if mu - target <= tol:
            break
    S, mu = best
    if mu - target > tol:
        raise ConvergenceError(
            f"coherence {mu:.6g} not within {tol} of lower bound {target:.6g}",
            best_value=mu, best=SignatureMatrix(S))
    return SignatureMatrix(S)


def select_sequences(S, k_used):
    """Keep the first ``k_used`` columns."""
    if not 1 <= k_used <= S.K:
        raise ValueError(f"k_used must be in [1, {S.K}], got {k_used}")
    return SignatureMatrix(S.columns[:, :k_used])


def save_sequences(S, path):
    """Write a sequence set as text; values use 17 significant digits."""
    lines = [
        FORMAT_HEADER,
        f"K {S.K}",
        f"L {S.L}",
        f"tsc {S.tsc:.17g}",
        f"coherence {S.coherence:.17g}",
    ]
    for row in S.columns:
        lines.append(" ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_sequences(path):
    """Read a file written by :func:`save_sequences`."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0].strip() != FORMAT_HEADER:
        raise FormatError(f"{path}: missing or unsupported header")
    try:
        header = dict(line.split(None, 1) for line in text[1:5])
        K, L = int(header["K"]), int(header["L"])
        rows = []
        for line in text[5:5 + L]:
            pairs = [p.split(",") for p in line.split()]
            rows.append([complex(float(re), float(im)) for re, im in pairs])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if len(rows) != L or any(len(r) != K for r in rows):
        raise FormatError(f"{path}: expected {L} rows of {K} values, found {[len(r) for r in rows]}")
    cols = np.array(rows, dtype=complex)
    return SignatureMatrix(cols)
