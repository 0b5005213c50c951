"""Metric aggregation and CSV emission for simulation runs.

A run's record list folds into a :class:`RunSummary` (collision probability,
decode failure rate, SINR quantiles, bookkeeping counters); summaries and
raw records are written as locale-independent, byte-stable CSV.
"""

import math
import os
from dataclasses import dataclass

from .engine import SimConfig

SUMMARY_COLUMNS = [
    "scheme", "prfs", "scenario", "n_tx", "rate_mbps", "pdb_ms", "k_rx",
    "seed", "collision_probability", "decode_failure_rate", "sinr_min",
    "sinr_p25", "sinr_median", "sinr_p75", "sinr_max", "pdb_violations",
    "forced_selections", "frames",
]

RECORD_COLUMNS = [
    "tx", "rx", "slot", "cells", "collided", "sinr_db", "decoded", "forced",
]


@dataclass(frozen=True)
class RunSummary:
    """Aggregated outcome of one run, one row of summary.csv."""

    scheme: str
    prfs: int
    scenario: str
    n_tx: int
    rate_mbps: float
    pdb_ms: float
    k_rx: int
    seed: int
    collision_probability: float
    decode_failure_rate: float
    sinr_min: float
    sinr_p25: float
    sinr_median: float
    sinr_p75: float
    sinr_max: float
    pdb_violations: int
    forced_selections: int
    frames: int


def collision_probability(records):
    """Fraction of transmissions that overlapped another pair's resources."""
    if not records:
        raise ValueError("record list is empty")
    return sum(1 for r in records if r.collided) / len(records)


def decode_failure_rate(records):
    if not records:
        raise ValueError("record list is empty")
    return sum(1 for r in records if not r.decoded) / len(records)


def _nearest_rank(sorted_values, q):
    """Nearest-rank quantile: the ceil(q * n)-th smallest value."""
    n = len(sorted_values)
    rank = max(1, math.ceil(q * n))
    return sorted_values[rank - 1]


def sinr_summary(records):
    """Min / p25 / median / p75 / max of the per-record SINR (nearest rank)."""
    if not records:
        raise ValueError("record list is empty")
    values = sorted(r.sinr_db for r in records)
    return {
        "min": values[0],
        "p25": _nearest_rank(values, 0.25),
        "median": _nearest_rank(values, 0.50),
        "p75": _nearest_rank(values, 0.75),
        "max": values[-1],
    }


def summarize(cfg: SimConfig, records, pdb_violations=0) -> RunSummary:
    quantiles = sinr_summary(records)
    prfs_id = int(cfg.prfs.id.split("-")[1]) if "-" in cfg.prfs.id else 0
    return RunSummary(
        scheme=str(getattr(cfg.scheme, "value", cfg.scheme)),
        prfs=prfs_id,
        scenario=cfg.scenario.kind,
        n_tx=cfg.n_tx,
        rate_mbps=cfg.rate_mbps,
        pdb_ms=cfg.pdb_ms,
        k_rx=cfg.scenario.k_rx,
        seed=cfg.seed,
        collision_probability=collision_probability(records),
        decode_failure_rate=decode_failure_rate(records),
        sinr_min=quantiles["min"],
        sinr_p25=quantiles["p25"],
        sinr_median=quantiles["median"],
        sinr_p75=quantiles["p75"],
        sinr_max=quantiles["max"],
        pdb_violations=pdb_violations,
        forced_selections=sum(1 for r in records if r.forced),
        frames=len(records),
    )


def _fmt(value):
    """Fixed-decimal, dot-separated rendering; never scientific notation."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.10f}"
    return str(value)


def summary_row(summary: RunSummary):
    return ",".join(_fmt(getattr(summary, col)) for col in SUMMARY_COLUMNS)


def write_results(summary: RunSummary, records, out_dir, emit_records=False,
                  append=False):
    """Write summary.csv (one row per run) and optionally records.csv.

    With ``append`` the summary row is added to an existing file (sweep
    mode); headers are written exactly once.
    """
    os.makedirs(out_dir, exist_ok=True)
    summary_path = os.path.join(out_dir, "summary.csv")
    mode = "a" if append and os.path.exists(summary_path) else "w"
    with open(summary_path, mode, encoding="ascii", newline="\n") as fh:
        if mode == "w":
            fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        fh.write(summary_row(summary) + "\n")

    if emit_records:
        records_path = os.path.join(out_dir, "records.csv")
        mode = "a" if append and os.path.exists(records_path) else "w"
        with open(records_path, mode, encoding="ascii", newline="\n") as fh:
            if mode == "w":
                fh.write(",".join(RECORD_COLUMNS) + "\n")
            for r in records:
                cells = ";".join(f"{s}:{c}" for s, c in r.cells)
                fh.write(",".join([
                    str(r.link[0]), str(r.link[1]), str(r.slot), cells,
                    _fmt(bool(r.collided)), _fmt(float(r.sinr_db)),
                    _fmt(bool(r.decoded)), _fmt(bool(r.forced)),
                ]) + "\n")
    return summary_path


def read_summary(path):
    """Parse summary.csv back into dicts (inverse of write_results)."""
    rows = []
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            values = line.strip().split(",")
            row = {}
            for col, val in zip(header, values):
                if col in ("scheme", "scenario"):
                    row[col] = val
                elif col in ("prfs", "n_tx", "k_rx", "seed", "pdb_violations",
                             "forced_selections", "frames"):
                    row[col] = int(val)
                else:
                    row[col] = float(val)
            rows.append(row)
    return rows
