"""Monte-Carlo orchestration of the full-duplex uplink and downlink chains.

A trial is one SC-FDMA symbol on one channel realization.  All SNR points of
a sweep are evaluated inside the same trial on the same realization (the
noise is one unit-power draw scaled per point), which keeps BER curves
smooth and makes a trial's outcome a pure function of
``(config, master_seed, trial_index)``.

In full-duplex mode both directions are co-simulated: each node's transmit
waveform is the other direction's self-interference source.  The
``direction`` setting only selects which receivers are evaluated.
"""

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import modem
from .channel import apply_channel, draw_link_set, freq_response
from .config import SimConfig
from .dspcore import dft
from .downlink import svd_beamformers, ue_equalize, ue_postprocess, waterfill, zf_directions
from .errors import SingularityError
from .impairments import complex_normal, pa_distort, si_inject, sic_cancel, tx_noise_add
from .scfdma import WaveformNumerology, despread, enb_tx_chain, remove_bias, rx_front, ue_tx_chain
from .uplink import detect_block

log = logging.getLogger(__name__)

THREADS_ENV = "FDXSIM_THREADS"
CSV_HEADER = (
    "snr_db", "direction", "duplex", "sic_mode", "trials",
    "bit_errors", "bits_total", "ber", "precoder_failures",
)
_STREAMS = (
    "channel", "ul_bits", "dl_bits", "ul_tx_noise", "dl_tx_noise", "enb_noise",
    "ue_noise", "enb_si", "ue_si", "enb_residual", "ue_residual", "xlink",
)


@dataclass
class TrialCounts:
    uplink_errors: np.ndarray
    downlink_errors: np.ndarray
    precoder_failure: bool = False


@dataclass(frozen=True)
class BerRecord:
    snr_db: float
    direction: str
    duplex: str
    sic_mode: str
    trials: int
    bit_errors: int
    bits_total: int
    ber: float
    precoder_failures: int


def trial_streams(master_seed, trial_index):
    """Independent generators for every random quantity of one trial."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial_index,))
    return dict(zip(_STREAMS, (np.random.default_rng(s) for s in seq.spawn(len(_STREAMS)))))


def noise_power(snr_db):
    """Per-subcarrier noise power for unit-energy symbols at Es/N0 = `snr_db`."""
    return 10.0 ** (-np.asarray(snr_db, dtype=float) / 10.0)


def _transmit(s, cfg, rng):
    a = pa_distort(s, cfg.pa) if cfg.pa_enabled else s
    return tx_noise_add(a, cfg.tx_noise_dbc, rng)


def run_trial(cfg: SimConfig, trial_index: int) -> TrialCounts:
    """Bit errors of one trial at every SNR point of `cfg`."""
    rng = trial_streams(cfg.master_seed, trial_index)
    num = WaveformNumerology(cfg.n_fft, cfg.n_data, cfg.cp_samples)
    smap = num.data_map()
    idx = list(smap.indices)
    n0 = noise_power(cfg.snr_db_list)
    n_snr, m, k, n_e = n0.size, cfg.n_data, cfg.k, cfg.n_e
    fd = cfg.duplex == "fd"
    directions = cfg.directions
    ref_power = m / cfg.n_fft  # time-domain power of one unit-Es stream

    links = draw_link_set(rng["channel"], n_e, k, cfg.l_taps)
    h = freq_response(links.taps, cfg.n_fft)[..., idx]  # (n_e, k, M)

    counts = TrialCounts(np.zeros(n_snr, dtype=np.int64), np.zeros(n_snr, dtype=np.int64))

    bits_ul = modem.random_bits(rng["ul_bits"], (k, 4 * m))
    bits_dl = modem.random_bits(rng["dl_bits"], (k, 4 * m))

    crosslink = math.isfinite(cfg.ue_xlink_attenuation_db)
    if fd or crosslink or "uplink" in directions:
        s_ul = ue_tx_chain(modem.qam16_map(bits_ul), smap, num)  # (k, T)
        a_ul = _transmit(s_ul, cfg, rng["ul_tx_noise"])

    if fd or "downlink" in directions:
        bf = svd_beamformers(np.transpose(h, (2, 1, 0)))  # rows (M, k, n_e)
        try:
            directions_zf = zf_directions(bf.v)  # (M, n_e, k)
        except SingularityError:
            counts.precoder_failure = True
            log.debug("trial %d: rank-deficient beam directions", trial_index)
        if counts.precoder_failure:
            s_dl = np.zeros((n_snr, n_e, num.symbol_len), dtype=complex)
            a_dl = s_dl.copy()
        else:
            col_norm_sq = np.sum(np.abs(directions_zf) ** 2, axis=-2).T  # (k, M)
            sigma = bf.sigma.T  # (k, M)
            alloc = waterfill(
                np.broadcast_to(sigma, (n_snr, k, m)), n0[:, None], float(m), col_norm_sq
            )
            alpha = alloc.alpha  # (S, k, M)
            x_bar = dft(modem.qam16_map(bits_dl), m)  # (k, M)
            z = np.einsum("mji,sim,im->sjim", directions_zf, alpha, x_bar)
            s_dl = enb_tx_chain(z, smap, num)  # (S, n_e, T)
            a_dl = _transmit(s_dl, cfg, rng["dl_tx_noise"])

    if "uplink" in directions:
        r = apply_channel(links.uplink_taps(), a_ul[None]).sum(axis=1)  # (n_e, T)
        w = complex_normal(rng["enb_noise"], r.shape)
        r = r + np.sqrt(n0)[:, None, None] * w
        if fd:
            r, gains = si_inject(r, a_dl, cfg.si_coupling, rng["enb_si"], ref_power)
            r = sic_cancel(r, s_dl, a_dl, gains, cfg.sic_mode, cfg.si_coupling, n0, rng["enb_residual"])
        y = np.swapaxes(rx_front(r, smap, num), -1, -2)  # (S, M, n_e)
        est, bias, _ = detect_block(y, np.transpose(h, (2, 0, 1)), n0[:, None])
        x_hat = remove_bias(despread(np.swapaxes(est, -1, -2)), np.swapaxes(bias, -1, -2))
        errors = modem.qam16_demap(x_hat) != bits_ul
        counts.uplink_errors += errors.sum(axis=(1, 2))

    if "downlink" in directions:
        if counts.precoder_failure:
            counts.downlink_errors += k * 4 * m
        else:
            r = apply_channel(links.downlink_taps(), a_dl[:, None]).sum(axis=2)  # (S, k, T)
            r = r + np.sqrt(n0)[:, None, None] * complex_normal(rng["ue_noise"], (k, num.symbol_len))
            if crosslink:
                r = r + _ue_crosslink(cfg, a_ul, rng["xlink"])
            if fd:
                r = np.stack(
                    [_ue_self_interference(cfg, r[:, l], s_ul[l], a_ul[l], n0, ref_power, rng) for l in range(k)],
                    axis=1,
                )
            y_hat = ue_postprocess(rx_front(r, smap, num), bf.u.T)
            sigma_eff = sigma * alpha
            eq = ue_equalize(y_hat, sigma_eff, n0[:, None, None])
            bias = sigma_eff**2 / (sigma_eff**2 + n0[:, None, None])
            x_hat = remove_bias(despread(eq), bias)
            errors = modem.qam16_demap(x_hat) != bits_dl
            counts.downlink_errors += errors.sum(axis=(1, 2))
    return counts


def _ue_self_interference(cfg, r, s_own, a_own, n0, ref_power, rng):
    """Inject and cancel one UE's own uplink transmission; `r` is (S, T)."""
    r, gains = si_inject(r[:, None], a_own[None], cfg.si_coupling, rng["ue_si"], ref_power)
    r = sic_cancel(r, s_own[None], a_own[None], gains, cfg.sic_mode, cfg.si_coupling, n0, rng["ue_residual"])
    return r[:, 0]


def _ue_crosslink(cfg, a_ul, rng):
    """Attenuated uplink transmissions of the other UEs arriving at each UE."""
    k = cfg.k
    taps = complex_normal(rng, (k, k, cfg.l_taps), 1.0 / cfg.l_taps)
    taps = np.triu(np.moveaxis(taps, -1, 0), 1)
    taps = np.moveaxis(taps + np.swapaxes(taps, -1, -2), 0, -1)  # reciprocal, no self-link
    gain = 10.0 ** (-cfg.ue_xlink_attenuation_db / 20.0)
    return gain * apply_channel(taps, a_ul[None]).sum(axis=1)


def _run_chunk(args):
    cfg, start, stop = args
    n = len(cfg.snr_db_list)
    ul = np.zeros(n, dtype=np.int64)
    dl = np.zeros(n, dtype=np.int64)
    failures = 0
    for t in range(start, stop):
        c = run_trial(cfg, t)
        ul += c.uplink_errors
        dl += c.downlink_errors
        failures += c.precoder_failure
    return ul, dl, failures


def resolve_workers(workers=None):
    if workers is None:
        env = os.environ.get(THREADS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def run_sweep(cfg: SimConfig, workers=None, chunk_size=None):
    """Aggregate ``trials_per_point`` trials into one record per SNR and direction.

    Trials are independent and may run in worker processes; totals are
    integer sums, so the result does not depend on scheduling.
    """
    cfg.validate()
    workers = resolve_workers(workers)
    n_trials = cfg.trials_per_point
    chunk_size = chunk_size or max(1, math.ceil(n_trials / (4 * workers)))
    chunks = [(cfg, s, min(s + chunk_size, n_trials)) for s in range(0, n_trials, chunk_size)]
    n = len(cfg.snr_db_list)
    ul = np.zeros(n, dtype=np.int64)
    dl = np.zeros(n, dtype=np.int64)
    failures = 0
    if workers == 1:
        results = map(_run_chunk, chunks)
        parts = list(results)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, chunks))
    for u, d, f in parts:
        ul += u
        dl += d
        failures += f

    bits_total = n_trials * cfg.bits_per_trial
    errors = {"uplink": ul, "downlink": dl}
    records = [
        BerRecord(
            snr_db=snr,
            direction=direction,
            duplex=cfg.duplex,
            sic_mode=cfg.sic_mode.value,
            trials=n_trials,
            bit_errors=int(errors[direction][i]),
            bits_total=bits_total,
            ber=int(errors[direction][i]) / bits_total,
            precoder_failures=failures,
        )
        for i, snr in enumerate(cfg.snr_db_list)
        for direction in cfg.directions
    ]
    return sort_records(records)


def sort_records(records):
    return sorted(records, key=lambda r: (r.snr_db, r.direction, r.sic_mode))


def _format_row(r):
    return [
        f"{r.snr_db:g}", r.direction, r.duplex, r.sic_mode, str(r.trials),
        str(r.bit_errors), str(r.bits_total), f"{r.ber:.6g}", str(r.precoder_failures),
    ]


def format_csv(records):
    if not records:
        raise ValueError("no records to write")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in sort_records(records):
        writer.writerow(_format_row(r))
    return buf.getvalue()


def write_csv(records, path):
    text = format_csv(records)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [
        BerRecord(
            snr_db=float(r["snr_db"]),
            direction=r["direction"],
            duplex=r["duplex"],
            sic_mode=r["sic_mode"],
            trials=int(r["trials"]),
            bit_errors=int(r["bit_errors"]),
            bits_total=int(r["bits_total"]),
            ber=float(r["ber"]),
            precoder_failures=int(r["precoder_failures"]),
        )
        for r in rows
    ]
