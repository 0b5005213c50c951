"""Command-line entry point: single runs and parameter sweeps."""

import argparse
import sys

from . import metrics
from .config import ConfigError, parse_config
from .engine import run


def build_parser():
    p = argparse.ArgumentParser(
        prog="mmv2x",
        description="Slot-level simulator of standalone sidelink resource "
                    "allocation with directional 60 GHz beamforming.")
    p.add_argument("--scheme", help="dbra | dbra-o | rra (list to sweep)")
    p.add_argument("--prfs", help="resource frame structure preset, 1..4")
    p.add_argument("--scenario", help="1w-ld | 1w-hd | 2w-ld | 2w-hd")
    p.add_argument("--ntx", help="transmit array elements, e.g. 4, 16 or 64")
    p.add_argument("--nrx", help="receive array elements")
    p.add_argument("--rate-mbps", dest="rate_mbps",
                   help="application rate per link in Mbps")
    p.add_argument("--pdb-ms", dest="pdb_ms", help="packet delay budget in ms")
    p.add_argument("--krx", help="receivers per transmitter")
    p.add_argument("--duration-s", dest="duration_s",
                   help="simulated time per run in seconds")
    p.add_argument("--seed", help="base seed; sweep run i uses seed + i")
    p.add_argument("--config", help="config file (key = value lines)")
    p.add_argument("--out", help="output directory for CSV results")
    p.add_argument("--emit-records", dest="emit_records", action="store_const",
                   const=True, default=None,
                   help="also write records.csv (one row per transmission)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        configs, options = parse_config(args)
    except ConfigError as exc:
        print(f"mmv2x: {exc}", file=sys.stderr)
        return 1

    try:
        for index, cfg in enumerate(configs):
            records = run(cfg)
            summary = metrics.summarize(cfg, records)
            metrics.write_results(summary, records, options["out"],
                                  emit_records=options["emit_records"],
                                  append=index > 0)
            print(f"{summary.scheme} prfs={summary.prfs} "
                  f"{summary.scenario} ntx={summary.n_tx} "
                  f"rate={summary.rate_mbps:g}Mbps seed={summary.seed}: "
                  f"collision={summary.collision_probability:.4f} "
                  f"decode_fail={summary.decode_failure_rate:.4f} "
                  f"sinr_med={summary.sinr_median:.1f}dB "
                  f"frames={summary.frames}")
    except (ValueError, OSError) as exc:
        print(f"mmv2x: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
