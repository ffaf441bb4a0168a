"""Conventional sparsifying transforms: DCT, DFT, and PCA.

Each transform maps a length-N frame to N real coefficients in an
orthonormal basis; sparsification keeps the K largest-magnitude
coefficients through the same pruning operation the autoencoder uses, so
all methods are compared on identical code paths.

The DFT uses a real-valued packing: the DC term, then interleaved real
and imaginary parts of the positive frequencies (each scaled by sqrt 2),
and the Nyquist term for even N.  A kept complex frequency therefore
consumes two of the K slots, which keeps the sparsity accounting honest
in real numbers.
"""

from __future__ import annotations

import numpy as np
from scipy.fft import dct as _dct, idct as _idct

from . import core

__all__ = ["Sparsifier", "DctSparsifier", "DftSparsifier", "PcaSparsifier", "fit"]

KINDS = ("dct", "dft", "pca")


class Sparsifier:
    """Common interface: encode a frame to a K-sparse code, decode it back."""

    kind: str
    code_length: int

    def transform(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inverse_transform(self, c: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def encode(self, x: np.ndarray, k: int) -> np.ndarray:
        """Transform then keep the k largest-magnitude coefficients."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.code_length,):
            raise ValueError(
                f"expected frame of length {self.code_length}, got {x.shape}"
            )
        return core.shrink(self.transform(x), k)

    def decode(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        if s.shape != (self.code_length,):
            raise ValueError(
                f"expected code of length {self.code_length}, got {s.shape}"
            )
        return self.inverse_transform(s)


class DctSparsifier(Sparsifier):
    """Orthonormal type-II discrete cosine transform; stateless."""

    kind = "dct"

    def __init__(self, n: int):
        self.code_length = n

    def transform(self, x):
        return _dct(x, norm="ortho")

    def inverse_transform(self, c):
        return _idct(c, norm="ortho")


class DftSparsifier(Sparsifier):
    """Orthonormal real-packed discrete Fourier transform; stateless."""

    kind = "dft"

    def __init__(self, n: int):
        self.code_length = n

    def transform(self, x):
        n = self.code_length
        spec = np.fft.rfft(x) / np.sqrt(n)
        out = np.empty(n)
        out[0] = spec[0].real
        half = (n - 1) // 2  # positive frequencies below Nyquist
        out[1 : 1 + 2 * half : 2] = np.sqrt(2.0) * spec[1 : 1 + half].real
        out[2 : 2 + 2 * half : 2] = np.sqrt(2.0) * spec[1 : 1 + half].imag
        if n % 2 == 0:
            out[-1] = spec[-1].real
        return out

    def inverse_transform(self, c):
        n = self.code_length
        half = (n - 1) // 2
        spec = np.zeros(n // 2 + 1, dtype=complex)
        spec[0] = c[0]
        spec[1 : 1 + half] = (c[1 : 1 + 2 * half : 2]
                              + 1j * c[2 : 2 + 2 * half : 2]) / np.sqrt(2.0)
        if n % 2 == 0:
            spec[-1] = c[-1]
        return np.fft.irfft(spec * np.sqrt(n), n=n)


class PcaSparsifier(Sparsifier):
    """Full square PCA basis fitted to training data.

    Keeps all N components (sorted by descending eigenvalue) and relies on
    top-K pruning for sparsity; decoding re-adds the training mean.
    """

    kind = "pca"

    def __init__(self, components: np.ndarray, mean: np.ndarray):
        self.components = components  # (N, N), rows orthonormal
        self.mean = mean
        self.code_length = components.shape[0]

    @classmethod
    def fit(cls, X: np.ndarray) -> "PcaSparsifier":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"expected a 2-D training matrix, got {X.shape}")
        T, N = X.shape
        if T < N:
            raise ValueError(f"PCA needs at least N={N} rows, got {T}")
        mean = X.mean(axis=0)
        centered = X - mean
        cov = centered.T @ centered / T
        eigvals, eigvecs = np.linalg.eigh(cov)
        order = np.argsort(eigvals)[::-1]
        self = cls(components=eigvecs[:, order].T.copy(), mean=mean)
        self.eigenvalues = eigvals[order]
        return self

    def transform(self, x):
        return self.components @ (x - self.mean)

    def inverse_transform(self, c):
        return self.components.T @ c + self.mean


def fit(kind: str, X: np.ndarray) -> Sparsifier:
    """Build a sparsifier of the given kind from a (T, N) training matrix.

    DCT and DFT ignore the data apart from its width; PCA eigendecomposes
    the column covariance.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D training matrix, got {X.shape}")
    kind = kind.lower()
    if kind == "dct":
        return DctSparsifier(X.shape[1])
    if kind == "dft":
        return DftSparsifier(X.shape[1])
    if kind == "pca":
        return PcaSparsifier.fit(X)
    raise ValueError(f"unknown sparsifier kind {kind!r}; expected one of {KINDS}")
