"""Command-line entry point: ``fdxsim --preset paper-fig6 --trials 200 --out ber.csv``."""

import argparse
import sys

from .config import DIRECTIONS, DUPLEX_MODES, PRESETS, SimConfig, load_config, parse_snr_range, preset
from .errors import ConfigError
from .harness import format_csv, run_sweep, write_csv
from .impairments import SicMode


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="fdxsim", description="BER-vs-SNR sweeps of a full-duplex multiuser SC-FDMA link.")
    p.add_argument("--config", metavar="PATH", help="key = value file with SimConfig fields")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--direction", choices=DIRECTIONS)
    p.add_argument("--snr", metavar="START:STEP:STOP", help="Es/N0 sweep in dB, stop inclusive")
    p.add_argument("--trials", type=int, metavar="N", help="trials (SC-FDMA symbols) per SNR point")
    p.add_argument("--seed", type=int, metavar="U64")
    p.add_argument("--sic", choices=[m.value for m in SicMode])
    p.add_argument("--duplex", choices=DUPLEX_MODES)
    p.add_argument("--out", metavar="CSV", help="output path (default: stdout)")
    return p


def config_from_args(args):
    cfg = preset(args.preset) if args.preset else SimConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    overrides = {}
    if args.direction:
        overrides["direction"] = args.direction
    if args.snr:
        try:
            overrides["snr_db_list"] = parse_snr_range(args.snr)
        except ValueError as exc:
            raise ConfigError("snr_db_list", str(exc)) from None
    if args.trials is not None:
        overrides["trials_per_point"] = args.trials
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.sic:
        overrides["sic_mode"] = args.sic
    if args.duplex:
        overrides["duplex"] = args.duplex
    return cfg.replace(**overrides) if overrides else cfg


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        parser.print_help(sys.stderr)
        return 2
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        records = run_sweep(cfg)
        if args.out:
            write_csv(records, args.out)
        else:
            sys.stdout.write(format_csv(records))
    except ConfigError as exc:
        print(f"fdxsim: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"fdxsim: error: {exc.strerror or exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
