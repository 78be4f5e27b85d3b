"""Gray-mapped square 16-QAM and bit error counting.

Bit-to-symbol table (bits ``b0 b1 b2 b3``, the LTE convention)::

    I = (1 - 2 b0) * (2 - (1 - 2 b2)) / sqrt(10)
    Q = (1 - 2 b1) * (2 - (1 - 2 b3)) / sqrt(10)

so ``b0``/``b1`` select the sign and ``b2``/``b3`` the magnitude (0 -> 1,
1 -> 3) of the in-phase/quadrature component.  ``0000`` maps to
``(1 + 1j) / sqrt(10)``.  Average symbol energy is exactly 1.
"""

import numpy as np

from .errors import DimensionError

BITS_PER_SYMBOL = 4
SCALE = 1.0 / np.sqrt(10.0)


def _level(sign_bit, mag_bit):
    return (1 - 2 * sign_bit) * (1 + 2 * mag_bit)


def qam16_map(bits):
    bits = np.asarray(bits, dtype=np.int8)
    if bits.shape[-1] % BITS_PER_SYMBOL:
        raise DimensionError(f"bit count {bits.shape[-1]} is not a multiple of {BITS_PER_SYMBOL}")
    b = bits.reshape(bits.shape[:-1] + (-1, BITS_PER_SYMBOL))
    i = _level(b[..., 0], b[..., 2])
    q = _level(b[..., 1], b[..., 3])
    return SCALE * (i + 1j * q)


def _slice_axis(v):
    """Hard decision on one axis: (sign bit, magnitude bit)."""
    sign = (v < 0).astype(np.int8)
    mag = (np.abs(v) > 2 * SCALE).astype(np.int8)
    return sign, mag


def qam16_demap(symbols):
    """Minimum-distance hard decisions back to bits."""
    s = np.asarray(symbols, dtype=complex)
    bi, bi_mag = _slice_axis(s.real)
    bq, bq_mag = _slice_axis(s.imag)
    bits = np.stack([bi, bq, bi_mag, bq_mag], axis=-1)
    return bits.reshape(s.shape[:-1] + (-1,)) if s.ndim else bits


def qam16_points():
    """All 16 constellation points indexed by their 4-bit label (b0 is the MSB)."""
    labels = (np.arange(16)[:, None] >> np.arange(3, -1, -1)) & 1
    return qam16_map(labels.reshape(-1)), labels


def slice_symbols(symbols):
    """Nearest constellation point."""
    return qam16_map(qam16_demap(symbols))


def random_bits(rng, shape):
    return rng.integers(0, 2, size=shape, dtype=np.int8)


def ber_count(tx, rx):
    tx = np.asarray(tx)
    rx = np.asarray(rx)
    if tx.shape != rx.shape:
        raise DimensionError(f"bit blocks differ in shape: {tx.shape} vs {rx.shape}")
    return int(np.count_nonzero(tx != rx)), int(tx.size)
