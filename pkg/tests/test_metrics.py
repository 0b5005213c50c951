import math
import os

import numpy as np
import pytest

from mmv2x.cli import build_parser, main
from mmv2x.config import ConfigError, parse_config, read_config_file
from mmv2x.engine import SimConfig, TransmissionRecord, run
from mmv2x.metrics import (collision_probability, decode_failure_rate,
                           read_summary, sinr_summary, summarize,
                           write_results)
from mmv2x.scenario import ScenarioConfig


def rec(collided=False, sinr=10.0, decoded=True, forced=False, link=(0, 1),
        slot=0, cells=((2, 0),)):
    return TransmissionRecord(link=link, slot=slot, cells=tuple(cells),
                              collided=collided, sinr_db=sinr,
                              decoded=decoded, forced=forced)


def test_collision_probability():
    records = [rec(collided=True)] * 2 + [rec()] * 8
    assert collision_probability(records) == pytest.approx(0.2)
    assert collision_probability([rec()] * 5) == 0.0
    # independent recount
    records = [rec(collided=bool(i % 3 == 0)) for i in range(30)]
    manual = sum(1 for r in records if r.collided) / 30
    assert collision_probability(records) == pytest.approx(manual)
    with pytest.raises(ValueError):
        collision_probability([])


def test_sinr_summary_degenerate_and_median():
    s = sinr_summary([rec(sinr=10.0)])
    assert all(v == 10.0 for v in s.values())
    s = sinr_summary([rec(sinr=v) for v in (0.0, 10.0, 20.0, 30.0, 40.0)])
    assert s["median"] == 20.0
    assert s["min"] == 0.0 and s["max"] == 40.0
    with pytest.raises(ValueError):
        sinr_summary([])


def test_sinr_summary_matches_sort_oracle():
    rng = np.random.default_rng(31)
    values = rng.normal(20, 15, size=1000)
    records = [rec(sinr=float(v)) for v in values]
    s = sinr_summary(records)
    ordered = np.sort(values)
    for q, key in ((0.25, "p25"), (0.5, "median"), (0.75, "p75")):
        assert s[key] == ordered[math.ceil(q * len(values)) - 1]
    assert s["min"] == ordered[0] and s["max"] == ordered[-1]


def run_small(tmp_path, emit_records=True, seed=9):
    cfg = SimConfig(scheme="rra",
                    scenario=ScenarioConfig(kind="custom", vehicles_per_lane=3,
                                            lane_length=200.0, k_rx=1, seed=seed),
                    frame_size=570_000, duration=1.0, seed=seed)
    records = run(cfg)
    summary = summarize(cfg, records)
    path = write_results(summary, records, str(tmp_path),
                         emit_records=emit_records)
    return cfg, records, summary, path


def test_write_results_roundtrip(tmp_path):
    cfg, records, summary, path = run_small(tmp_path)
    rows = read_summary(path)
    assert len(rows) == 1
    row = rows[0]
    assert row["scheme"] == "rra"
    assert row["frames"] == len(records)
    assert row["collision_probability"] == \
        pytest.approx(summary.collision_probability, abs=1e-9)
    assert row["sinr_median"] == pytest.approx(summary.sinr_median, abs=1e-9)
    assert row["seed"] == 9


def test_write_results_records_optional(tmp_path):
    run_small(tmp_path / "with", emit_records=True)
    assert os.path.exists(tmp_path / "with" / "records.csv")
    run_small(tmp_path / "without", emit_records=False)
    assert not os.path.exists(tmp_path / "without" / "records.csv")


def test_csv_byte_stable(tmp_path):
    run_small(tmp_path / "a")
    run_small(tmp_path / "b")
    for name in ("summary.csv", "records.csv"):
        a = open(tmp_path / "a" / name, "rb").read()
        b = open(tmp_path / "b" / name, "rb").read()
        assert a == b
        assert b.isascii() and b"e-" not in b.lower()


def test_summary_invariants(tmp_path):
    _, records, summary, _ = run_small(tmp_path)
    assert 0.0 <= summary.collision_probability <= 1.0
    ordered = [summary.sinr_min, summary.sinr_p25, summary.sinr_median,
               summary.sinr_p75, summary.sinr_max]
    assert ordered == sorted(ordered)
    clean = sum(1 for r in records if not r.collided)
    assert summary.collision_probability == pytest.approx(1 - clean / summary.frames)


# -- configuration parsing ----------------------------------------------------

def parse(argv):
    return parse_config(build_parser().parse_args(argv))


def test_parse_single_run():
    configs, options = parse(["--scheme", "dbra", "--prfs", "1",
                              "--scenario", "1w-hd", "--ntx", "64",
                              "--rate-mbps", "20", "--pdb-ms", "10",
                              "--seed", "7"])
    assert len(configs) == 1
    cfg = configs[0]
    assert cfg.scheme == "dbra"
    assert cfg.prfs.id == "PRFS-1"
    assert cfg.scenario.kind == "1w-hd"
    assert cfg.n_tx == 64
    assert cfg.frame_size == 2_000_000
    assert cfg.pdb_ms == 10.0
    assert cfg.seed == 7


def test_rate_to_frame_size():
    configs, _ = parse(["--rate-mbps", "5.7"])
    assert configs[0].frame_size == 570_000


def test_sweep_expansion_and_seeds():
    configs, _ = parse(["--ntx", "4,16,64", "--seed", "100"])
    assert len(configs) == 3
    assert [c.n_tx for c in configs] == [4, 16, 64]
    assert [c.seed for c in configs] == [100, 101, 102]
    pairs = {(c.n_tx, c.seed) for c in configs}
    assert len(pairs) == 3


def test_cartesian_product_size():
    configs, _ = parse(["--ntx", "[4,64]", "--scheme", "dbra,rra",
                        "--rate-mbps", "5.7,20"])
    assert len(configs) == 8
    assert len({(c.scheme, c.n_tx, c.frame_size, c.seed) for c in configs}) == 8


def test_config_file_and_flag_override(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("# sweep over arrays\nscheme = rra\nntx = 4, 16\nseed = 3\n")
    configs, _ = parse(["--config", str(path), "--scheme", "dbra"])
    assert len(configs) == 2
    assert all(c.scheme == "dbra" for c in configs)   # flag wins
    assert [c.n_tx for c in configs] == [4, 16]


def test_unknown_key_diagnostic(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("bandwidth = 7\n")
    with pytest.raises(ConfigError, match="unknown key 'bandwidth'"):
        read_config_file(str(path))


def test_out_of_range_diagnostics():
    with pytest.raises(ConfigError, match="'prfs'"):
        parse(["--prfs", "9"])
    with pytest.raises(ConfigError, match="'scheme'"):
        parse(["--scheme", "tdma"])
    with pytest.raises(ConfigError, match="'rate_mbps'"):
        parse(["--rate-mbps", "-4"])


def test_missing_value_diagnostic(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("ntx =\n")
    with pytest.raises(ConfigError, match="required key 'ntx'"):
        read_config_file(str(path))


def test_cli_single_run(tmp_path, capsys):
    code = main(["--scheme", "rra", "--scenario", "1w-ld", "--krx", "1",
                 "--duration-s", "1", "--seed", "3",
                 "--out", str(tmp_path)])
    assert code == 0
    assert os.path.exists(tmp_path / "summary.csv")
    out = capsys.readouterr().out
    assert "collision=" in out


def test_cli_sweep_rows(tmp_path):
    code = main(["--scheme", "rra", "--scenario", "1w-ld", "--krx", "1",
                 "--duration-s", "1", "--ntx", "4,64",
                 "--out", str(tmp_path)])
    assert code == 0
    rows = read_summary(tmp_path / "summary.csv")
    assert len(rows) == 2
    assert {r["n_tx"] for r in rows} == {4, 64}


def test_cli_error_exit(tmp_path, capsys):
    code = main(["--scheme", "nope", "--out", str(tmp_path)])
    assert code == 1
    assert "scheme" in capsys.readouterr().err
