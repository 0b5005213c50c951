"""Experiment configuration: CLI arguments, config files and sweeps.

A configuration is a flat set of key/value pairs.  Values may be given on
the command line or in a config file (``key = value`` lines, ``#`` comments);
command-line flags override file values.  Sweepable keys accept lists
(``ntx = 4, 16, 64`` or ``[4, 16, 64]``), and the Cartesian product over all
listed keys expands into one run per combination, with the run seed set to
``seed + run_index``.
"""

import itertools

from . import phy
from .allocator import Scheme
from .engine import SimConfig
from .scenario import SCENARIO_PRESETS, ScenarioConfig


class ConfigError(ValueError):
    """A configuration key is unknown, malformed or out of range."""


SWEEP_KEYS = ["scheme", "prfs", "scenario", "ntx", "nrx", "rate_mbps",
              "pdb_ms", "krx"]
SCALAR_KEYS = ["duration_s", "seed", "out", "emit_records"]
ALL_KEYS = SWEEP_KEYS + SCALAR_KEYS

DEFAULTS = {
    "scheme": "dbra",
    "prfs": 1,
    "scenario": "1w-ld",
    "ntx": 64,
    "nrx": 2,
    "rate_mbps": 5.7,
    "pdb_ms": 10.0,
    "krx": 5,
    "duration_s": 1.0,
    "seed": 1,
    "out": "results",
    "emit_records": False,
}


def _parse_scalar(key, text):
    text = text.strip()
    if text == "":
        raise ConfigError(f"missing value for required key '{key}'")
    if key == "scheme":
        try:
            return Scheme(text.lower()).value
        except ValueError:
            raise ConfigError(
                f"out-of-range value for key 'scheme': {text!r} "
                f"(expected dbra, dbra-o or rra)") from None
    if key == "scenario":
        if text.lower() not in SCENARIO_PRESETS:
            raise ConfigError(
                f"out-of-range value for key 'scenario': {text!r} "
                f"(expected one of {', '.join(SCENARIO_PRESETS)})")
        return text.lower()
    if key == "out":
        return text
    if key == "emit_records":
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"out-of-range value for key 'emit_records': {text!r}")
    try:
        if key in ("prfs", "ntx", "nrx", "krx", "seed"):
            value = int(text)
        else:
            value = float(text)
    except ValueError:
        raise ConfigError(
            f"malformed value for key '{key}': {text!r}") from None
    _check_range(key, value)
    return value


def _check_range(key, value):
    limits = {
        "prfs": lambda v: 1 <= v <= 4,
        "ntx": lambda v: v >= 1,
        "nrx": lambda v: v >= 1,
        "krx": lambda v: v >= 1,
        "rate_mbps": lambda v: v > 0,
        "pdb_ms": lambda v: v > 0,
        "duration_s": lambda v: v > 0,
        "seed": lambda v: True,
    }
    if key in limits and not limits[key](value):
        raise ConfigError(f"out-of-range value for key '{key}': {value!r}")


def _parse_value(key, text):
    """Parse a possibly-listed value; lists are only legal for sweep keys."""
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        text = text[1:-1]
    if "," in text:
        if key not in SWEEP_KEYS:
            raise ConfigError(f"key '{key}' does not accept a list")
        return [_parse_scalar(key, part) for part in text.split(",")]
    return _parse_scalar(key, text)


def read_config_file(path):
    """Flat key = value lines; '#' starts a comment; keys must be known."""
    values = {}
    try:
        lines = open(path, encoding="utf-8").read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, text = line.split("=", 1)
        key = key.strip().lower().replace("-", "_")
        if key not in ALL_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
        values[key] = _parse_value(key, text)
    return values


def _to_sim_config(values, seed):
    scenario = ScenarioConfig.preset(values["scenario"], k_rx=values["krx"],
                                     seed=seed)
    frame_rate = 10.0
    frame_size = round(values["rate_mbps"] * 1e6 / frame_rate)
    return SimConfig(
        scheme=values["scheme"],
        prfs=phy.PRFS_PRESETS[values["prfs"]],
        scenario=scenario,
        frame_size=frame_size,
        frame_rate=frame_rate,
        pdb_ms=values["pdb_ms"],
        duration=values["duration_s"],
        seed=seed,
        n_tx=values["ntx"],
        n_rx=values["nrx"],
    )


def expand(values):
    """Expand sweep lists into the Cartesian product of SimConfigs.

    Single values produce one config; every run in a sweep receives
    seed = base_seed + run_index, in deterministic key order.
    """
    axes = []
    for key in SWEEP_KEYS:
        v = values[key]
        axes.append([(key, x) for x in (v if isinstance(v, list) else [v])])
    configs = []
    base_seed = values["seed"]
    for index, combo in enumerate(itertools.product(*axes)):
        combo_values = dict(values)
        combo_values.update(dict(combo))
        configs.append(_to_sim_config(combo_values, seed=base_seed + index))
    return configs


def parse_config(args):
    """Merge config file and command-line flags into run configurations.

    ``args`` is the parsed argparse namespace.  Returns (configs, options)
    where options carries the output directory and the records flag.
    """
    values = dict(DEFAULTS)
    if args.config:
        values.update(read_config_file(args.config))
    for key in ALL_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = _parse_value(key, str(flag)) \
                if isinstance(flag, str) else flag
    options = {"out": values["out"], "emit_records": bool(values["emit_records"])}
    return expand(values), options
