"""Deterministic random-variate generation and small dense linear algebra.

Streams are counter-based (Philox4x32-10 keyed by ``(seed, stream_id)``):
the same key always yields the same sequence, and distinct stream ids are
statistically independent, so replications can be farmed out to any number
of workers without changing any draw.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels
from .errors import InvalidParameterError, NumericalError

_U64_MAX = 2**64


class RngStream:
    """A single-owner random stream identified by ``(seed, stream_id)``.

    The underlying state is a uint64 triple ``[seed, stream_id, counter]``
    shared with the compiled kernels; passing :meth:`state` into a kernel
    advances this stream.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if not (0 <= int(seed) < _U64_MAX and 0 <= int(stream_id) < _U64_MAX):
            raise InvalidParameterError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._s = np.array([self.seed, self.stream_id, 0], dtype=np.uint64)

    def state(self) -> np.ndarray:
        """Live state array; kernels that consume it advance this stream."""
        return self._s

    @property
    def counter(self) -> int:
        return int(self._s[2])

    def uniform(self) -> float:
        return float(_kernels.next_uniform(self._s))

    def standard_normal(self) -> float:
        return float(_kernels.next_normal(self._s))

    def uniforms(self, size: int) -> np.ndarray:
        out = np.empty(size)
        _kernels.fill_uniforms(self._s, out)
        return out

    def normals(self, size: int) -> np.ndarray:
        out = np.empty(size)
        _kernels.fill_normals(self._s, out)
        return out

    def gammas(self, shape: float, rate: float, size: int) -> np.ndarray:
        if shape <= 0 or rate <= 0:
            raise InvalidParameterError("gamma shape and rate must be positive")
        out = np.empty(size)
        _kernels.fill_gammas(self._s, shape, rate, out)
        return out


def sample_normal(mean: float, variance: float, rng: RngStream) -> float:
    """Draw from N(mean, variance); a zero variance returns the mean exactly."""
    if not variance >= 0.0:
        raise InvalidParameterError(f"variance must be nonnegative, got {variance}")
    if variance == 0.0:
        return float(mean)
    return float(mean) + math.sqrt(variance) * rng.standard_normal()


def sample_gamma(shape: float, rate: float, rng: RngStream) -> float:
    """Draw from Gamma(shape, rate); mean of draws converges to shape/rate."""
    if not shape > 0.0:
        raise InvalidParameterError(f"gamma shape must be positive, got {shape}")
    if not rate > 0.0:
        raise InvalidParameterError(f"gamma rate must be positive, got {rate}")
    return float(_kernels.next_gamma(rng.state(), shape, rate))


def sample_inverse_gamma(shape: float, rate: float, rng: RngStream) -> float:
    """Draw V such that 1/V ~ Gamma(shape, rate); used for variance conditionals."""
    if not shape > 0.0 or not rate > 0.0:
        raise InvalidParameterError("inverse-gamma shape and rate must be positive")
    return float(_kernels.next_invgamma(rng.state(), shape, rate))


def check_symmetric(a: np.ndarray, tol: float = 1e-12) -> None:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidParameterError("matrix must be square with dimension >= 1")
    scale = max(1.0, float(np.abs(a).max()))
    if float(np.abs(a - a.T).max()) > tol * scale:
        raise InvalidParameterError("matrix is not symmetric within tolerance")


def cholesky_lower(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor via the kernel routine; raises if not PD."""
    work = np.array(a, dtype=float, copy=True)
    if _kernels.cholesky_lower(work):
        raise NumericalError("matrix is not positive definite")
    return np.tril(work)


def sample_mvn(mean: np.ndarray, covariance: np.ndarray, rng: RngStream) -> np.ndarray:
    """Draw from N(mean, covariance).

    Uses a Cholesky factor when the covariance is positive definite and an
    eigendecomposition fallback when it is PSD but singular. A matrix with
    smallest eigenvalue below -1e-8 * trace is rejected as non-PSD.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(covariance, dtype=float)
    check_symmetric(cov)
    d = mean.shape[0]
    if cov.shape != (d, d):
        raise InvalidParameterError("mean and covariance dimensions do not match")
    if not np.any(cov):
        return mean.copy()
    work = cov.copy()
    if _kernels.cholesky_lower(work) == 0:
        factor = np.tril(work)
    else:
        eigvals, eigvecs = np.linalg.eigh(cov)
        if eigvals.min() < -1e-8 * max(np.trace(cov), 1e-300):
            raise NumericalError(
                f"covariance is not PSD (smallest eigenvalue {eigvals.min():.3e})"
            )
        factor = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))
    return mean + factor @ rng.normals(d)


def log_normal_density(x: float, mean: float, variance: float) -> float:
    """Exact log of the Gaussian density N(x | mean, variance)."""
    if not variance > 0.0:
        raise InvalidParameterError(f"variance must be positive, got {variance}")
    return float(_kernels.log_normal_pdf(x, mean, variance))
