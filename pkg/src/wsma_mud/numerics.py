"""Random streams and small complex linear-algebra kernels.

All randomness in the package flows through :class:`RandomStream`, a thin
wrapper over numpy's PCG64 bit generator (period 2**128). Child streams are
derived with :class:`numpy.random.SeedSequence` spawn keys, so a child is a
pure function of ``(seed, path of indices)`` and never depends on how much
the parent has been consumed. Gaussians come from numpy's ziggurat sampler.

Matrices are plain row-major (C order) numpy arrays.
"""

import contextlib

import numpy as np
import scipy.linalg
import threadpoolctl

from .errors import NotPositiveDefiniteError

RNG_ALGORITHM = "numpy-PCG64/SeedSequence"


class RandomStream:
    """Seeded, splittable random source.

    Parameters
    ----------
    seed : int
        Non-negative 64-bit seed.
    key : tuple of int, optional
        Spawn path from the root stream. Users normally leave this empty and
        call :meth:`child` instead.
    """

    def __init__(self, seed, key=()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        self._seq = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self.rng = np.random.Generator(np.random.PCG64(self._seq))

    def child(self, *index):
        """Independent stream for the given (non-negative) index path."""
        return RandomStream(self.seed, self.key + tuple(int(i) for i in index))

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, key={self.key})"


def as_stream(stream_or_seed):
    if isinstance(stream_or_seed, RandomStream):
        return stream_or_seed
    return RandomStream(stream_or_seed)


def sample_complex_gaussian(stream, n, total_variance, size=None):
    """Draw i.i.d. CN(0, total_variance) samples.

    Real and imaginary parts are independent with variance
    ``total_variance / 2`` each. ``size`` overrides ``n`` with an arbitrary
    output shape.
    """
    if total_variance < 0:
        raise ValueError("total_variance must be non-negative")
    shape = (n,) if size is None else size
    parts = stream.rng.standard_normal(tuple(shape) + (2,))
    scale = np.sqrt(total_variance / 2.0)
    return scale * (parts[..., 0] + 1j * parts[..., 1])


def solve_hermitian_system(A, b):
    """Solve ``A x = b`` for Hermitian positive-definite ``A`` via Cholesky.

    Stacks of systems (``A`` of shape ``(..., K, K)``, ``b`` of shape
    ``(..., K)``) are solved in one call.
    """
    A = np.asarray(A)
    b = np.asarray(b)
    try:
        if A.ndim == 2:
            factor = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
            return scipy.linalg.cho_solve(factor, b)
        C = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"matrix is not positive definite: {exc}") from exc
    # forward/back substitution with the batched factor
    w = np.linalg.solve(C, b[..., None])
    return np.linalg.solve(np.swapaxes(C, -1, -2).conj(), w)[..., 0]


def argmax_with_tie_break(v):
    """Index of the maximum, smallest index on ties."""
    v = np.asarray(v)
    if v.size == 0:
        raise ValueError("argmax of an empty vector")
    # np.argmax returns the first occurrence
    return int(np.argmax(v))


@contextlib.contextmanager
def strict_mode(enabled=True):
    """Pin BLAS/OpenMP pools to one thread for a fixed summation order."""
    if not enabled:
        yield
        return
    with threadpoolctl.threadpool_limits(limits=1):
        yield
