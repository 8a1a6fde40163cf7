"""Run configuration (YAML), validation, and CSV/metadata serialization.

The configuration schema is documented in docs/config-schema.md. Validation
errors carry the dotted path of the offending key so a bad config can be
fixed without reading source.
"""

import json

import numpy as np
import yaml

__all__ = [
    "ConfigError",
    "load_config",
    "resolve_config",
    "serialize_config",
    "grid_values",
    "write_csv",
    "write_meta",
    "EXPERIMENT_NAMES",
]

EXPERIMENT_NAMES = (
    "spectrum",
    "lpi-sweep",
    "leakage-spectroscopy",
    "free-evolution",
    "t2star-scan",
    "leakage-vs-gap",
    "b-calibration",
)


class ConfigError(ValueError):
    """Configuration file violates the schema; message names the key."""


# schema nodes: (type, default) -- default REQUIRED means the key must appear
REQUIRED = object()

_GRID_SCHEMA = {
    "start": (float, REQUIRED),
    "stop": (float, REQUIRED),
    "points": (int, REQUIRED),
    "scale": (str, "linear"),
}

_BASE_SCHEMA = {
    "experiment": (str, REQUIRED),
    "seed": (int, REQUIRED),
    "shots": (int, 500),
    "output_dir": (str, "out"),
    "threads": (int, 1),
    "constants": {
        "gmub_ghz_per_t": (float, 27.97),
    },
    "device": {
        "j0_mhz": (list, [30.0, 30.0, 30.0]),
        "v0_volts": (list, [0.03, 0.03, 0.03]),
        "cross_coupling": (list, [[1.0, 0.15, 0.15], [0.15, 1.0, 0.15], [0.15, 0.15, 1.0]]),
        "j_max_mhz": (float, 1e4),
    },
    "noise": {
        "hyperfine": {
            "sigma_mhz": (float, 0.091702),
            "mode": (str, "quasi-static"),
            "alpha": (float, 1.0),
            "band_hz": (list, [1e2, 1e5]),
        },
        "charge": {
            "sigma_volts": (float, 0.095e-3),
        },
    },
}

_EXPERIMENT_SCHEMAS = {
    "spectrum": {
        "grids": {"j12": dict(_GRID_SCHEMA)},
        "params": {
            "j13_mhz": (float, 100.0),
            "j23_mhz": (float, 100.0),
            "bz_mhz": (float, 0.0),
        },
        "grid_defaults": {"j12": {"start": 0.0, "stop": 200.0, "points": 201}},
    },
    "lpi-sweep": {
        "grids": {"va": dict(_GRID_SCHEMA), "vb": dict(_GRID_SCHEMA)},
        "params": {
            "fixed_pair": (str, "13"),
            "fixed_value_v": (object, None),
            "j_target_mhz": (float, 200.0),
            "rb_depth": (int, 4),
            "interleave_ns": (float, 20.0),
            "rb_j_mhz": (float, 150.0),
            "randomizations": (int, 3),
            "noiseless": (bool, True),
            "center_on_truth": (bool, True),
            "refine_factor": (float, 1.618034),
        },
        "grid_defaults": {
            "va": {"start": -0.005, "stop": 0.005, "points": 41},
            "vb": {"start": -0.005, "stop": 0.005, "points": 41},
        },
    },
    "leakage-spectroscopy": {
        "grids": {"bz": dict(_GRID_SCHEMA)},
        "params": {
            "j_mhz": (float, 2.4),
            "dwell_us": (object, None),
            "policy": (str, "lower-energy"),
        },
        "grid_defaults": {"bz": {"start": -5.5, "stop": 5.5, "points": 221}},
    },
    "free-evolution": {
        "grids": {"t": dict(_GRID_SCHEMA)},
        "params": {
            "eg_mhz": (float, 4.5),
            "policy": (str, "equal-mixture"),
            "j_pulse_mhz": (float, 50.0),
        },
        "grid_defaults": {"t": {"start": 0.0, "stop": 25.0, "points": 601}},
    },
    "t2star-scan": {
        "grids": {"eg": dict(_GRID_SCHEMA)},
        "params": {
            "low_window_mhz": (list, [0.3, 0.8]),
            "high_window_mhz": (list, [80.0, 200.0]),
            "t_max0_us": (float, 10.0),
            "t_points": (int, 281),
        },
        "grid_defaults": {"eg": {"start": 0.3, "stop": 200.0, "points": 17, "scale": "log"}},
    },
    "leakage-vs-gap": {
        "grids": {"eg": dict(_GRID_SCHEMA)},
        "params": {"dwell_us": (float, 1000.0)},
        "grid_defaults": {"eg": {"start": 1.5, "stop": 15.0, "points": 9, "scale": "log"}},
    },
    "b-calibration": {
        "grids": {"current": dict(_GRID_SCHEMA)},
        "params": {
            "j_values_mhz": (list, [8.0, 15.0, 23.0]),
            "coil": {
                "kappa_mt_per_ma": (float, 1.0),
                "b_par_mt": (float, 0.1),
                "b_perp_mt": (float, 0.15),
            },
            "dwell_us": (object, None),
            "osc_window_us": (float, 1.0),
            "osc_dt_ns": (float, 1.0),
        },
        "grid_defaults": {"current": {"start": -3.0, "stop": 3.0, "points": 601}},
    },
}


def load_config(path):
    """Parse a YAML config file; YAML errors keep their line information."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return raw


def _coerce(value, typ, path):
    if typ is object:
        return value
    if typ is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean, got {value!r}")
        return value
    if not isinstance(value, typ):
        raise ConfigError(f"{path}: expected {typ.__name__}, got {value!r}")
    return value


def _walk(schema, data, path):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping, got {data!r}")
    out = {}
    for key, spec in schema.items():
        sub_path = f"{path}.{key}" if path else key
        if isinstance(spec, dict):
            out[key] = _walk(spec, data.get(key), sub_path)
        else:
            typ, default = spec
            if key not in data:
                if default is REQUIRED:
                    raise ConfigError(f"missing required key: {sub_path}")
                out[key] = default
            else:
                out[key] = _coerce(data[key], typ, sub_path)
    unknown = set(data) - set(schema)
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigError(f"unknown key: {path + '.' if path else ''}{name}")
    return out


def resolve_config(raw):
    """Validate a raw config dict and fill defaults; raises ConfigError."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    name = raw.get("experiment")
    if name is None:
        raise ConfigError("missing required key: experiment")
    if name not in EXPERIMENT_NAMES:
        raise ConfigError(
            f"experiment: unknown experiment {name!r}; valid names: {', '.join(EXPERIMENT_NAMES)}"
        )
    exp_schema = _EXPERIMENT_SCHEMAS[name]
    schema = dict(_BASE_SCHEMA)
    schema["grids"] = exp_schema["grids"]
    schema["params"] = exp_schema["params"]
    data = dict(raw)
    grids = dict(data.get("grids") or {})
    for grid_name, defaults in exp_schema["grid_defaults"].items():
        grid = dict(defaults)
        grid.update(grids.get(grid_name) or {})
        grids[grid_name] = grid
    data["grids"] = grids
    resolved = _walk(schema, data, "")
    for grid_name, grid in resolved["grids"].items():
        if grid["points"] < 1:
            raise ConfigError(f"grids.{grid_name}.points: must be >= 1")
        if grid["scale"] not in ("linear", "log"):
            raise ConfigError(f"grids.{grid_name}.scale: must be 'linear' or 'log'")
        if grid["scale"] == "log" and (grid["start"] <= 0 or grid["stop"] <= 0):
            raise ConfigError(f"grids.{grid_name}: log scale needs positive bounds")
    if resolved["shots"] < 1:
        raise ConfigError("shots: must be >= 1")
    return resolved


def serialize_config(config):
    """Deterministic YAML round-trip form of a resolved config."""
    return yaml.safe_dump(config, sort_keys=True, default_flow_style=False)


def grid_values(grid):
    if grid["scale"] == "log":
        return np.geomspace(grid["start"], grid["stop"], grid["points"])
    return np.linspace(grid["start"], grid["stop"], grid["points"])


def _format(x):
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path, columns):
    """Write (label, array) columns; floats carry 17 significant digits."""
    labels = [label for label, _ in columns]
    arrays = [np.asarray(arr) for _, arr in columns]
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise ValueError("CSV columns must share one length")
    lines = [",".join(labels)]
    for i in range(n):
        lines.append(",".join(_format(a[i]) for a in arrays))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def write_meta(path, meta):
    """Deterministic JSON metadata document (sorted keys, no timestamps)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(meta), fh, indent=2, sort_keys=True)
        fh.write("\n")
