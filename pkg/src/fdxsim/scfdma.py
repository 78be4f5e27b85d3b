"""SC-FDMA transmit and receive paths shared by UEs and the eNB."""

from dataclasses import dataclass

import numpy as np

from .dspcore import cp_add, cp_strip, dft, idft
from .errors import DimensionError, ParameterError


@dataclass(frozen=True)
class SubcarrierMap:
    """Ordered, injective placement of M spread symbols onto N subcarriers.

    Encodes the N x M allocation matrix; its transpose is the deallocation.
    """

    indices: tuple
    n_total: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise ParameterError("subcarrier indices must be distinct")
        if len(idx) > self.n_total or any(not 0 <= i < self.n_total for i in idx):
            raise ParameterError(f"indices must be {len(idx)} <= N values in [0, {self.n_total})")
        object.__setattr__(self, "indices", idx)

    @property
    def m_used(self):
        return len(self.indices)

    @classmethod
    def centered(cls, n_total, m_used):
        """Contiguous block in the middle of the band, guard bands either side."""
        start = (n_total - m_used) // 2
        return cls(tuple(range(start, start + m_used)), n_total)

    def matrix(self):
        a = np.zeros((self.n_total, self.m_used))
        a[list(self.indices), np.arange(self.m_used)] = 1.0
        return a


@dataclass(frozen=True)
class WaveformNumerology:
    n_fft: int = 256
    n_data: int = 180
    cp_len: int = 15
    bandwidth_hz: float = 3e6

    def __post_init__(self):
        if not 1 <= self.n_data <= self.n_fft:
            raise ParameterError(f"need 1 <= n_data <= n_fft, got {self.n_data} > {self.n_fft}")
        if not 0 <= self.cp_len < self.n_fft:
            raise ParameterError(f"cp_len {self.cp_len} outside [0, n_fft)")

    @property
    def symbol_len(self):
        return self.n_fft + self.cp_len

    def data_map(self):
        return SubcarrierMap.centered(self.n_fft, self.n_data)

    def supports(self, l_taps):
        """True if the prefix absorbs an `l_taps` channel without ISI."""
        return self.cp_len >= l_taps - 1


def cp_samples_for(duration_s, sample_rate_hz):
    """Prefix length in samples, rounded up so the circular model stays exact."""
    return int(np.ceil(duration_s * sample_rate_hz - 1e-9))


def allocate(x_bar, smap):
    x_bar = np.asarray(x_bar, dtype=complex)
    if x_bar.shape[-1] != smap.m_used:
        raise DimensionError(f"block of {x_bar.shape[-1]} symbols for a map of {smap.m_used}")
    d = np.zeros(x_bar.shape[:-1] + (smap.n_total,), dtype=complex)
    d[..., list(smap.indices)] = x_bar
    return d


def deallocate(y_bar, smap):
    y_bar = np.asarray(y_bar, dtype=complex)
    if y_bar.shape[-1] != smap.n_total:
        raise DimensionError(f"block of {y_bar.shape[-1]} subcarriers for an N={smap.n_total} map")
    return y_bar[..., list(smap.indices)]


def ue_tx_chain(x, smap, num):
    """DFT-spread, map, N-point IDFT and prefix one UE data block."""
    x_bar = dft(x, smap.m_used)
    return cp_add(idft(allocate(x_bar, smap), num.n_fft), num.cp_len)


def enb_tx_chain(z, maps, num):
    """Time-domain waveform of one eNB transmit chain.

    `z` holds one precoded frequency-domain block per user for this antenna,
    shape ``(..., K, M)``; users sharing subcarriers superpose.
    """
    z = np.asarray(z, dtype=complex)
    if isinstance(maps, SubcarrierMap):
        maps = [maps] * z.shape[-2]
    if len(maps) != z.shape[-2]:
        raise DimensionError(f"{z.shape[-2]} user blocks but {len(maps)} subcarrier maps")
    e = sum(allocate(z[..., i, :], smap) for i, smap in enumerate(maps))
    return cp_add(idft(e, num.n_fft), num.cp_len)


def rx_front(r, smap, num):
    """Strip the prefix, take the N-point DFT and pick the allocated subcarriers."""
    r = np.asarray(r, dtype=complex)
    if r.shape[-1] != num.symbol_len:
        raise DimensionError(f"received block of {r.shape[-1]} samples, expected {num.symbol_len}")
    return deallocate(dft(cp_strip(r, num.cp_len), num.n_fft), smap)


def despread(d_hat):
    """M-point IDFT back to time-domain symbol estimates."""
    d_hat = np.asarray(d_hat, dtype=complex)
    return idft(d_hat, d_hat.shape[-1])


def remove_bias(x_hat, bias):
    """Undo the average shrinkage a linear MMSE equalizer puts on each symbol.

    `bias` is the per-subcarrier real gain of the estimate on the wanted
    symbol; after despreading every time-domain symbol sees its mean.
    """
    mean = np.mean(bias, axis=-1, keepdims=True)
    return np.divide(x_hat, mean, out=np.zeros_like(x_hat), where=mean > 0)
