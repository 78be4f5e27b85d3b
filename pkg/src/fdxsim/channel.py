"""Frequency-selective reciprocal links between eNB antennas and UEs.

One :class:`LinkSet` is drawn per trial and read by both the uplink and the
downlink chains, so reciprocity holds by construction rather than by copy.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError


@dataclass(frozen=True)
class TapChannel:
    """Time-domain impulse response of one antenna-to-UE link."""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=complex).reshape(-1)
        if taps.size < 1 or not np.all(np.isfinite(taps)):
            raise ParameterError("a tap channel needs at least one finite tap")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def n_taps(self):
        return self.taps.size


@dataclass(frozen=True)
class LinkSet:
    """N_e x K grid of tap channels; ``taps[j, i]`` links antenna j and UE i.

    The same array serves both directions.
    """

    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=complex)
        if taps.ndim != 3:
            raise DimensionError("link taps must have shape (n_e, k, l_taps)")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def n_e(self):
        return self.taps.shape[0]

    @property
    def k(self):
        return self.taps.shape[1]

    @property
    def l_taps(self):
        return self.taps.shape[2]

    def link(self, j, i):
        return TapChannel(self.taps[j, i])

    def uplink_taps(self):
        """Taps indexed ``[receive antenna, user]``."""
        return self.taps

    def downlink_taps(self):
        """Taps indexed ``[user, transmit antenna]``; a view of the same data."""
        return np.swapaxes(self.taps, 0, 1)


def draw_link_set(rng, n_e, k, l_taps):
    """Rayleigh taps with a uniform power delay profile (unit expected energy)."""
    for name, value in (("n_e", n_e), ("k", k), ("l_taps", l_taps)):
        if value < 1:
            raise ParameterError(f"{name} must be >= 1, got {value}")
    shape = (n_e, k, l_taps)
    scale = np.sqrt(0.5 / l_taps)
    taps = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return LinkSet(taps)


def freq_response(taps, n_fft):
    """Per-subcarrier coefficients of a tap vector (or stack of them).

    Unnormalized FFT of the zero-padded taps, so multiplying a unitary-DFT
    block by these coefficients equals circular convolution in time.
    """
    if isinstance(taps, TapChannel):
        taps = taps.taps
    taps = np.asarray(taps, dtype=complex)
    if n_fft < taps.shape[-1]:
        raise ParameterError(f"n_fft={n_fft} is shorter than the {taps.shape[-1]}-tap channel")
    return np.fft.fft(taps, n_fft)


def stack_user_columns(coefficients, m):
    """The N_e-vector channel column of one user on subcarrier `m`.

    `coefficients` holds that user's responses, shape ``(n_e, n_subcarriers)``.
    """
    coefficients = np.asarray(coefficients)
    if coefficients.ndim == 1:
        coefficients = coefficients[None, :]
    if not 0 <= m < coefficients.shape[-1]:
        raise IndexError(f"subcarrier {m} outside [0, {coefficients.shape[-1]})")
    return coefficients[:, m].copy()


def apply_channel(taps, x):
    """Linear convolution of `x` with `taps`, truncated to ``len(x)``.

    Models one transmitted block with silence before it.  After a cyclic
    prefix of at least ``L - 1`` samples is stripped, the result equals the
    circular convolution of the block core.  Broadcasts over leading axes.
    """
    taps = np.asarray(taps, dtype=complex)
    x = np.asarray(x, dtype=complex)
    length = x.shape[-1]
    shape = np.broadcast_shapes(taps.shape[:-1], x.shape[:-1]) + (length,)
    y = np.zeros(shape, dtype=complex)
    for b in range(min(taps.shape[-1], length)):
        y[..., b:] += taps[..., b : b + 1] * x[..., : length - b]
    return y
