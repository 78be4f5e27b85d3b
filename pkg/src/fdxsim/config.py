"""Experiment configuration, presets and the ``key = value`` file format.

A config file holds one field per line, named exactly like the
:class:`SimConfig` attributes.  Nested fields use a dotted prefix::

    # comments and blank lines are ignored
    n_e = 4
    snr_db_list = 0:5:30
    sic_mode = full
    pa_enabled = true
    pa.input_backoff_db = 6
    si_coupling.residual_floor_db = -inf
"""

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .impairments import PaParams, SiCoupling, SicMode

DIRECTIONS = ("uplink", "downlink", "both")
DUPLEX_MODES = ("fd", "hd")
MODULATION = "16qam"


def parse_snr_range(text):
    """``start:step:stop`` (stop inclusive) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"empty SNR range {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(n))
    return tuple(float(v) for v in text.split(",") if v.strip())


@dataclass(frozen=True)
class SimConfig:
    n_e: int = 4
    k: int = 2
    n_fft: int = 256
    n_data: int = 180
    l_taps: int = 7
    cp_samples: int = 15
    modulation: str = MODULATION
    direction: str = "both"
    duplex: str = "fd"
    sic_mode: SicMode = SicMode.FULL
    si_coupling: SiCoupling = field(default_factory=SiCoupling)
    pa: PaParams = field(default_factory=PaParams)
    pa_enabled: bool = False
    tx_noise_dbc: float = -math.inf
    snr_db_list: tuple = parse_snr_range("0:2:40")
    trials_per_point: int = 2000
    master_seed: int = 0
    ue_xlink_attenuation_db: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "sic_mode", _enum(SicMode, self.sic_mode, "sic_mode"))
        object.__setattr__(self, "snr_db_list", tuple(float(s) for s in self.snr_db_list))
        self.validate()

    def validate(self):
        for name in ("n_e", "k", "n_fft", "n_data", "l_taps", "trials_per_point"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(name, f"must be an integer >= 1, got {value!r}")
        if self.n_data > self.n_fft:
            raise ConfigError("n_data", f"{self.n_data} data subcarriers exceed n_fft={self.n_fft}")
        if self.k > self.n_e:
            raise ConfigError("k", f"{self.k} users cannot share subcarriers over {self.n_e} antennas")
        if self.l_taps > self.n_fft:
            raise ConfigError("l_taps", "channel longer than the transform")
        if not 0 <= self.cp_samples < self.n_fft:
            raise ConfigError("cp_samples", f"must be in [0, n_fft), got {self.cp_samples}")
        if self.cp_samples < self.l_taps - 1:
            raise ConfigError("cp_samples", f"prefix of {self.cp_samples} cannot absorb {self.l_taps} taps")
        if self.modulation != MODULATION:
            raise ConfigError("modulation", f"only {MODULATION} is supported")
        if self.direction not in DIRECTIONS:
            raise ConfigError("direction", f"expected one of {DIRECTIONS}, got {self.direction!r}")
        if self.duplex not in DUPLEX_MODES:
            raise ConfigError("duplex", f"expected one of {DUPLEX_MODES}, got {self.duplex!r}")
        if not self.snr_db_list:
            raise ConfigError("snr_db_list", "at least one SNR point is required")
        if not all(math.isfinite(s) for s in self.snr_db_list):
            raise ConfigError("snr_db_list", "SNR points must be finite")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed", "must be an unsigned 64-bit integer")
        if self.tx_noise_dbc > 0:
            raise ConfigError("tx_noise_dbc", "transmit noise must sit below the signal (<= 0 dBc)")
        if (
            self.duplex == "fd"
            and self.sic_mode is SicMode.FULL_NO_CTC
            and self.direction != "uplink"
        ):
            raise ConfigError("sic_mode", "full-no-ctc applies only to the multi-chain eNB (direction=uplink)")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def directions(self):
        return ("uplink", "downlink") if self.direction == "both" else (self.direction,)

    @property
    def bits_per_trial(self):
        """Bits per direction per trial."""
        return self.k * self.n_data * 4


def _enum(cls, value, name):
    try:
        return cls(value)
    except ValueError:
        raise ConfigError(name, f"unknown value {value!r}") from None


PRESETS = {
    # UE receiver under FD downlink
    "paper-fig5": dict(direction="downlink", pa_enabled=True, tx_noise_dbc=-40.0),
    # multi-antenna eNB receiver under FD uplink
    "paper-fig6": dict(direction="uplink", pa_enabled=True, tx_noise_dbc=-40.0),
}


def preset(name):
    try:
        return SimConfig(**PRESETS[name])
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _converter(annotation_default):
    if isinstance(annotation_default, bool):
        return _parse_bool
    if isinstance(annotation_default, int):
        return int
    if isinstance(annotation_default, float):
        return float
    if isinstance(annotation_default, tuple):
        return parse_snr_range
    return lambda s: s.strip()


def parse_config_text(text, base=None):
    """Apply ``key = value`` lines on top of `base` (default :class:`SimConfig`)."""
    base = base or SimConfig()
    top, nested = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if "." in key:
            group, sub = key.split(".", 1)
            if group not in ("pa", "si_coupling"):
                raise ConfigError(key, "unknown field")
            default = getattr(getattr(base, group), sub, None)
            if default is None or sub not in {f.name for f in dataclasses.fields(getattr(base, group))}:
                raise ConfigError(key, "unknown field")
            try:
                nested.setdefault(group, {})[sub] = float(value)
            except ValueError:
                raise ConfigError(key, f"cannot parse {value!r}") from None
            continue
        if key not in {f.name for f in dataclasses.fields(SimConfig)} or key in ("pa", "si_coupling"):
            raise ConfigError(key, "unknown field")
        try:
            top[key] = _converter(getattr(base, key))(value)
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from None
    for group, subs in nested.items():
        top[group] = dataclasses.replace(getattr(base, group), **subs)
    return base.replace(**top)


def load_config(path, base=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config_text(text, base)
