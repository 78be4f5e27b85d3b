"""Link-level simulator for a full-duplex multiuser SC-FDMA cellular link."""

from .config import SimConfig, load_config, preset
from .harness import BerRecord, run_sweep, run_trial, write_csv
from .impairments import PaParams, SiCoupling, SicMode

__all__ = [
    "BerRecord",
    "PaParams",
    "SiCoupling",
    "SicMode",
    "SimConfig",
    "load_config",
    "preset",
    "run_sweep",
    "run_trial",
    "write_csv",
]
__version__ = "0.1.0"
