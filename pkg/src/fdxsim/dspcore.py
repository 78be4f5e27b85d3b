"""Discrete-signal primitives shared by the transmit and receive chains.

Normalization convention
------------------------
Both :func:`dft` and :func:`idft` are unitary (``1/sqrt(N)`` in each
direction), so Parseval holds without bookkeeping.  A consequence is that
the convolution theorem picks up a ``sqrt(N)`` factor::

    dft(circular_convolve(h, s)) == sqrt(N) * dft(h) * dft(s)

The channel module absorbs that factor by defining the per-subcarrier
coefficients as the *unnormalized* FFT of the zero-padded taps, i.e.
``H = sqrt(N) * dft(h)``, so ``rx = H * tx`` subcarrier by subcarrier.

All functions operate along the last axis and accept stacked inputs.
"""

import numpy as np

from .errors import DegenerateChannelError, DimensionError, ParameterError, SingularityError

#: relative threshold on the smallest singular value in :func:`pseudo_inverse`
RANK_TOL = 1e-10


def _check_length(x, size):
    if size < 1:
        raise ParameterError(f"transform size must be >= 1, got {size}")
    if x.shape[-1] != size:
        raise DimensionError(f"block length {x.shape[-1]} does not match size {size}")


def dft(x, size):
    """Unitary forward DFT of the last axis of `x`."""
    x = np.asarray(x, dtype=complex)
    _check_length(x, size)
    return np.fft.fft(x, norm="ortho")


def idft(x, size):
    """Unitary inverse DFT; exact inverse of :func:`dft`."""
    x = np.asarray(x, dtype=complex)
    _check_length(x, size)
    return np.fft.ifft(x, norm="ortho")


def dft_matrix(size, inverse=False):
    """Dense unitary DFT matrix, the O(N^2) reference for :func:`dft`."""
    n = np.arange(size)
    sign = 1.0 if inverse else -1.0
    return np.exp(sign * 2j * np.pi * np.outer(n, n) / size) / np.sqrt(size)


def dft_direct(x, size, inverse=False):
    """Direct matrix-product DFT.  Slow; kept as a cross-check of the fast path."""
    x = np.asarray(x, dtype=complex)
    _check_length(x, size)
    return x @ dft_matrix(size, inverse).T


def circular_convolve(h, s):
    """N-point circular convolution ``y[n] = sum_b h[b] s[(n - b) mod N]``.

    Evaluated through the unnormalized FFT pair, which reproduces the
    time-domain double sum exactly (up to rounding).
    """
    h = np.asarray(h, dtype=complex)
    s = np.asarray(s, dtype=complex)
    if h.shape[-1] != s.shape[-1]:
        raise DimensionError(f"kernel length {h.shape[-1]} != signal length {s.shape[-1]}")
    return np.fft.ifft(np.fft.fft(h) * np.fft.fft(s))


def cp_add(s, cp_len):
    """Prepend the last `cp_len` samples of `s` as a cyclic prefix."""
    s = np.asarray(s)
    if not 0 <= cp_len < s.shape[-1]:
        raise ParameterError(f"cp_len must be in [0, {s.shape[-1]}), got {cp_len}")
    if cp_len == 0:
        return s.copy()
    return np.concatenate([s[..., -cp_len:], s], axis=-1)


def cp_strip(r, cp_len):
    """Drop the first `cp_len` samples."""
    r = np.asarray(r)
    if cp_len < 0 or r.shape[-1] <= cp_len:
        raise ParameterError(f"block of length {r.shape[-1]} cannot lose a {cp_len}-sample prefix")
    return r[..., cp_len:].copy()


def row_svd(h):
    """SVD of a single 1 x N_e channel row: ``h == u * sigma * v.conj()``.

    For a rank-one row the left factor is a unit scalar; we fix ``u = 1``
    and let `v` carry the phase.  ``sigma**2`` is the single nonzero
    eigenvalue of ``h h^H``.
    """
    h = np.asarray(h, dtype=complex)
    sigma = float(np.linalg.norm(h))
    if sigma == 0.0:
        raise DegenerateChannelError("all-zero channel row has no singular direction")
    return 1.0 + 0.0j, sigma, h.conj() / sigma


def pseudo_inverse(a, rank_tol=RANK_TOL):
    """Right pseudo-inverse ``A^H (A A^H)^{-1}`` of a fat, full-row-rank matrix.

    Accepts a stack of matrices (``(..., K, N_e)``).  Raises
    :class:`SingularityError` if any matrix has a singular value below
    ``rank_tol`` times its largest one.
    """
    a = np.asarray(a, dtype=complex)
    rows, cols = a.shape[-2:]
    if rows > cols:
        raise DimensionError(f"expected K <= N_e, got a {rows} x {cols} matrix")
    sv = np.linalg.svd(a, compute_uv=False)
    if np.any(sv[..., -1] <= rank_tol * sv[..., 0]):
        raise SingularityError("matrix is rank deficient; zero-forcing is undefined")
    gram = a @ np.conj(np.swapaxes(a, -1, -2))
    # gram is Hermitian, so A^H G^{-1} == (G^{-1} A)^H
    return np.conj(np.swapaxes(np.linalg.solve(gram, a), -1, -2))
