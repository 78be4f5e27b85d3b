"""Transmit-side impairments and full-duplex self-interference.

The self-interference (SI) model is behavioral: every co-located transmit
chain couples into every receive chain through a frequency-flat gain whose
magnitude puts the coupled power a fixed number of dB above the desired
signal.  Cancellation stages subtract progressively better replicas of the
coupled waveforms, following the linear / nonlinear / transmit-noise
taxonomy of multi-antenna full-duplex radios.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError

BOLTZMANN = 1.380649e-23  # J/K, exact in SI


@dataclass(frozen=True)
class PaParams:
    """Ghorbani AM/AM and AM/PM coefficients plus the input back-off.

    Defaults are the common solid-state amplifier fit.
    """

    x1: float = 8.1081
    x2: float = 1.5413
    x3: float = 6.5202
    x4: float = -0.0718
    y1: float = 4.6645
    y2: float = 2.0965
    y3: float = 10.88
    y4: float = -0.003
    input_backoff_db: float = 6.0

    @classmethod
    def linear(cls, gain=1.0, input_backoff_db=6.0):
        """Coefficients that reduce the model to a pure linear gain."""
        return cls(0.0, 1.0, 0.0, gain, 0.0, 1.0, 0.0, 0.0, input_backoff_db)


class SicMode(str, enum.Enum):
    OFF = "off"
    LINEAR_ONLY = "linear"
    FULL_NO_CTC = "full-no-ctc"
    FULL = "full"


@dataclass(frozen=True)
class SiCoupling:
    si_over_signal_db: float = 60.0
    residual_floor_db: float = -10.0

    def __post_init__(self):
        if not self.si_over_signal_db >= 0:
            raise ConfigError("si_over_signal_db", "must be >= 0 dB")


def complex_normal(rng, shape, power=1.0):
    """Circularly-symmetric complex Gaussian samples of the given power."""
    scale = np.sqrt(np.asarray(power, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def am_am(r, p):
    """Output amplitude ``x1 r^x2 / (1 + x3 r^x2) + x4 r``."""
    rx = np.power(r, p.x2)
    return p.x1 * rx / (1.0 + p.x3 * rx) + p.x4 * r


def am_pm(r, p):
    """Phase rotation in radians ``y1 r^y2 / (1 + y3 r^y2) + y4 r``."""
    ry = np.power(r, p.y2)
    return p.y1 * ry / (1.0 + p.y3 * ry) + p.y4 * r


def pa_distort(s, p):
    """Memoryless Ghorbani nonlinearity applied block-wise along the last axis.

    Each block is driven at ``input_backoff_db`` below unit RMS amplitude.
    The output is scaled back and divided by its Bussgang (best linear) gain,
    so the linear component of the result is exactly `s` and everything
    else is distortion uncorrelated with `s`.
    """
    s = np.asarray(s, dtype=complex)
    power = np.mean(np.abs(s) ** 2, axis=-1, keepdims=True)
    out = np.zeros_like(s)
    live = np.broadcast_to(power > 0, s.shape[:-1] + (1,))[..., 0]
    if not np.any(live):
        return out
    s_live = s[live]
    drive = 10.0 ** (-p.input_backoff_db / 20.0) / np.sqrt(power[live])
    r = np.abs(s_live) * drive
    y = am_am(r, p) * np.exp(1j * (np.angle(s_live) + am_pm(r, p))) / drive
    gain = np.sum(np.conj(s_live) * y, axis=-1, keepdims=True) / np.sum(
        np.abs(s_live) ** 2, axis=-1, keepdims=True
    )
    out[live] = y / gain
    return out


def tx_noise_add(s, level_dbc, rng):
    """Add white transmit noise `level_dbc` dB below the block's own power.

    Phase noise is folded into this additive term.
    """
    s = np.asarray(s, dtype=complex)
    if level_dbc == -math.inf:
        return s.copy()
    power = np.mean(np.abs(s) ** 2, axis=-1, keepdims=True) * 10.0 ** (level_dbc / 10.0)
    return s + complex_normal(rng, s.shape, power)


def thermal_noise_power(temperature_k=290.0, bandwidth_hz=3e6):
    """k_B * T * B in watts."""
    return BOLTZMANN * temperature_k * bandwidth_hz


def thermal_noise_add(s, n0, rng):
    s = np.asarray(s, dtype=complex)
    if n0 < 0:
        raise ValueError(f"noise power must be >= 0, got {n0}")
    if n0 == 0:
        return s.copy()
    return s + complex_normal(rng, s.shape, n0)


def coupling_gains(tx_analog, coupling, ref_power, rng, n_rx=None):
    """Complex SI coupling gains, shape ``(..., n_rx, n_tx)``.

    Each gain has a uniform random phase and a magnitude that puts the
    coupled copy of that chain's measured power `si_over_signal_db` above
    `ref_power`.  Silent chains get zero gain.
    """
    tx_analog = np.asarray(tx_analog, dtype=complex)
    n_tx = tx_analog.shape[-2]
    n_rx = n_tx if n_rx is None else n_rx
    phases = np.exp(2j * np.pi * rng.random((n_rx, n_tx)))
    tx_power = np.mean(np.abs(tx_analog) ** 2, axis=-1)
    target = ref_power * 10.0 ** (coupling.si_over_signal_db / 10.0)
    with np.errstate(divide="ignore"):
        mag = np.where(tx_power > 0, np.sqrt(target / np.where(tx_power > 0, tx_power, 1.0)), 0.0)
    return phases * mag[..., None, :]


def si_inject(rx, own_tx_analog, coupling, rng, ref_power):
    """Add self-talk and cross-talk from every co-located transmit chain.

    `rx` has shape ``(..., n_rx, T)`` and `own_tx_analog` ``(..., n_tx, T)``.
    Returns the interfered waveform and the gains used, which the
    cancellation stages are assumed to know.
    """
    rx = np.asarray(rx, dtype=complex)
    own_tx_analog = np.asarray(own_tx_analog, dtype=complex)
    if own_tx_analog.shape[-2] == 0:
        return rx.copy(), np.zeros(rx.shape[:-1] + (0,), dtype=complex)
    if own_tx_analog.shape[-1] != rx.shape[-1]:
        raise DimensionError("transmit and receive blocks differ in length")
    gains = coupling_gains(own_tx_analog, coupling, ref_power, rng, n_rx=rx.shape[-2])
    return rx + gains @ own_tx_analog, gains


def sic_cancel(rx, known_tx_digital, tx_analog, gains, mode, coupling, n0, rng):
    """Staged self-interference cancellation.

    ``OFF``
        nothing is removed.
    ``LINEAR_ONLY``
        the coupled ideal baseband of every chain is subtracted, leaving PA
        distortion and transmit noise.
    ``FULL_NO_CTC``
        self-talk (chain j into receiver j) is removed completely by
        reconstructing the actual analog waveform; cross-talk only gets the
        linear stage.  Needs one transmit chain per receive chain.
    ``FULL``
        every coupled analog waveform is removed, then a white residual
        `residual_floor_db` relative to `n0` is added.
    """
    mode = SicMode(mode)
    rx = np.asarray(rx, dtype=complex)
    if mode is SicMode.OFF or gains.shape[-1] == 0:
        return rx.copy()
    if mode is SicMode.LINEAR_ONLY:
        return rx - gains @ known_tx_digital
    if mode is SicMode.FULL_NO_CTC:
        n_rx, n_tx = gains.shape[-2:]
        if n_tx < 2:
            raise ConfigError("sic_mode", "full-no-ctc needs a node with several transmit chains")
        if n_rx != n_tx:
            raise DimensionError("self-talk pairing needs one transmit chain per receive chain")
        eye = np.eye(n_tx, dtype=bool)
        self_talk = np.where(eye, gains, 0.0)
        cross_talk = np.where(eye, 0.0, gains)
        return rx - self_talk @ tx_analog - cross_talk @ known_tx_digital
    out = rx - gains @ tx_analog
    if coupling.residual_floor_db > -math.inf:
        level = np.asarray(n0, dtype=float) * 10.0 ** (coupling.residual_floor_db / 10.0)
        level = np.reshape(level, np.shape(level) + (1,) * (out.ndim - np.ndim(level)))
        out = out + complex_normal(rng, out.shape, level)
    return out
