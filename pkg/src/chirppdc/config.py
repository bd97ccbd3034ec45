"""Declarative run configuration: YAML schema, validation, builders.

One config file drives every CLI subcommand.  Validation is strict:
unknown keys are rejected with their full field path, values are
type-checked, and nothing is computed before the whole file validates.
"""

from __future__ import annotations

import copy
import os

import numpy as np
import yaml

from .bogolyubov import DetuningGrid, SolverConfig
from .dispersion import DispersionModel, InteractionFrequencies
from .grating import GratingProfile


class ConfigError(ValueError):
    """Invalid configuration; message carries the offending field path."""


# grid sub-schema reused by several sections
_GRID = {"min_thz": "float", "max_thz": "float", "points": "int",
         "mirror": "bool"}

SCHEMA = {
    "dispersion": {
        "formula": "str",
        "coefficients": "float_list",
        "temperature_k": "float",
        "valid_range_um": "float_list",
    },
    "pump": {"wavelength_nm": "float"},
    "grating": {
        "kind": "str",
        "alpha": "float",
        "beta": "float",
        "constant_k": "float",
        "length_mm": "float",
    },
    "solver": {
        "nu0": "float_or_null",
        "coupling_g": "float_or_null",
        "rtol": "float",
        "atol": "float",
        "max_step_mm": "float_or_null",
        "workers": "int_or_auto",
        "grid": _GRID,
    },
    "observables": {
        "bins": "int_or_null",
        "bin_width_thz": "float_or_null",
        "efficiency": "float",
        "ensemble": "int",
        "seed": "int",
        "pulse_fwhm_ps": "float",
        "sfg_power_mw": "float",
        "tau_coarse_ps": "float_list",
        "tau_fine_fs": "float_list",
        "covariance_grid": {"__nullable__": True, **_GRID},
        "sfg_grid": {"__nullable__": True, **_GRID},
    },
    "gain": {
        "powers_mw": "float_list",
        "band_nm": "float_list",
        "calibration": "float",
        "grid": _GRID,
    },
    "output": {"directory": "str_or_null"},
    "design": {"points": "int"},
}

DEFAULTS = {
    "dispersion": {
        "formula": "gayer2008_e_mgo5_cln",
        "coefficients": [5.756, 0.0983, 0.2020, 189.32, 12.52, 1.32e-2,
                         2.860e-6, 4.7e-8, 6.113e-8, 1.516e-4],
        "temperature_k": 298.15,
        "valid_range_um": [0.5, 4.0],
    },
    "pump": {"wavelength_nm": 532.0},
    "grating": {
        "kind": "hyperbolic",
        "alpha": 735.0,
        "beta": 901.0,
        "constant_k": 774.0,
        "length_mm": 5.0,
    },
    "solver": {
        "nu0": 0.1,
        "coupling_g": None,
        "rtol": 1e-10,
        "atol": 1e-12,
        "max_step_mm": None,
        "workers": 1,
        "grid": {"min_thz": 25.6, "max_thz": 157.4, "points": 700,
                 "mirror": True},
    },
    "observables": {
        "bins": None,
        "bin_width_thz": 0.15,
        "efficiency": 1.0,
        "ensemble": 3000,
        "seed": 12345,
        "pulse_fwhm_ps": 18.0,
        "sfg_power_mw": 15.0,
        # coarse range bounded by the grid's unaliased window pi/dOmega
        "tau_coarse_ps": [-9.5, 9.5, 0.25],
        "tau_fine_fs": [-1450.0, -250.0, 2.0],
        "covariance_grid": {"min_thz": 66.0, "max_thz": 146.0,
                            "points": 1600, "mirror": True},
        "sfg_grid": {"min_thz": 25.6, "max_thz": 157.4, "points": 2640,
                     "mirror": False},
    },
    "gain": {
        "powers_mw": [4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0,
                      13.0, 14.0, 15.0],
        "band_nm": [1597.5, 1602.5],
        "calibration": 2.3805120560520026,
        # mirrored grid whose idler side covers the band above
        "grid": {"min_thz": 93.95, "max_thz": 94.83, "points": 40,
                 "mirror": True},
    },
    "output": {"directory": None},
    "design": {"points": 501},
}


def _check_leaf(path, kind, value):
    def fail(expected):
        raise ConfigError(f"{path}: expected {expected}, got {value!r}")

    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail("a number")
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            fail("an integer")
        return int(value)
    if kind == "bool":
        if not isinstance(value, bool):
            fail("a boolean")
        return value
    if kind == "str":
        if not isinstance(value, str):
            fail("a string")
        return value
    if kind == "str_or_null":
        if value is not None and not isinstance(value, str):
            fail("a string or null")
        return value
    if kind == "float_or_null":
        if value is None:
            return None
        return _check_leaf(path, "float", value)
    if kind == "int_or_null":
        if value is None:
            return None
        return _check_leaf(path, "int", value)
    if kind == "int_or_auto":
        if value == "auto":
            return os.cpu_count() or 1
        return _check_leaf(path, "int", value)
    if kind == "float_list":
        if not isinstance(value, (list, tuple)) or not value:
            fail("a non-empty list of numbers")
        return [_check_leaf(f"{path}[{i}]", "float", v)
                for i, v in enumerate(value)]
    raise AssertionError(f"unknown schema kind {kind}")


def _validate_node(path, schema, defaults, value):
    nullable = schema.get("__nullable__", False)
    if value is None:
        if nullable:
            return None
        raise ConfigError(f"{path}: section cannot be null")
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected a mapping")
    known = {k for k in schema if k != "__nullable__"}
    for key in value:
        if key not in known:
            full = f"{path}.{key}" if path else str(key)
            raise ConfigError(f"{full}: unknown key")
    out = {}
    for key in known:
        sub_schema = schema[key]
        sub_default = defaults.get(key) if isinstance(defaults, dict) else None
        sub_path = f"{path}.{key}" if path else key
        if key in value:
            if isinstance(sub_schema, dict):
                out[key] = _validate_node(sub_path, sub_schema,
                                          sub_default or {}, value[key])
            else:
                out[key] = _check_leaf(sub_path, sub_schema, value[key])
        else:
            out[key] = copy.deepcopy(sub_default)
    return out


def validate(raw):
    """Validate a raw config dict against the schema, filling defaults."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected a mapping")
    return _validate_node("", SCHEMA, DEFAULTS, raw)


def load_config(path=None):
    """Load and validate a YAML config; None loads the built-in defaults."""
    if path is None:
        return validate({})
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file does not parse as YAML: {exc}")
    return validate(raw)


def apply_overrides(cfg, overrides):
    """Apply dotted key=value overrides (values parsed as YAML scalars)."""
    out = copy.deepcopy(cfg)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        dotted, _, raw_val = item.partition("=")
        keys = dotted.strip().split(".")
        value = yaml.safe_load(raw_val)
        node = out
        for k in keys[:-1]:
            if not isinstance(node, dict) or k not in node:
                raise ConfigError(f"override {dotted}: unknown section {k!r}")
            if node[k] is None:
                node[k] = {}
            node = node[k]
        if not isinstance(node, dict):
            raise ConfigError(f"override {dotted}: not a section path")
        node[keys[-1]] = value
    return validate(out)


# -- builders ---------------------------------------------------------------

def build_dispersion(cfg):
    d = cfg["dispersion"]
    return DispersionModel(
        formula=d["formula"],
        coefficients=tuple(d["coefficients"]),
        temperature_k=d["temperature_k"],
        valid_range_um=tuple(d["valid_range_um"]),
    )


def build_freqs(cfg):
    return InteractionFrequencies(pump_wavelength_nm=cfg["pump"]["wavelength_nm"])


def build_profile(cfg):
    g = cfg["grating"]
    return GratingProfile(kind=g["kind"], alpha=g["alpha"], beta=g["beta"],
                          constant_k=g["constant_k"],
                          length_mm=g["length_mm"])


def build_grid(grid_cfg):
    to_rad = 2.0 * np.pi * 1e12
    return DetuningGrid(omega_min=grid_cfg["min_thz"] * to_rad,
                        omega_max=grid_cfg["max_thz"] * to_rad,
                        points=grid_cfg["points"],
                        mirror=grid_cfg["mirror"])


def build_solver(cfg, grid_cfg=None, coupling_g=None, nu0=None, workers=None):
    """SolverConfig from the solver section, with optional overrides."""
    s = cfg["solver"]
    if coupling_g is None and nu0 is None:
        coupling_g, nu0 = s["coupling_g"], s["nu0"]
        if coupling_g is not None and nu0 is not None:
            raise ConfigError(
                "solver: set exactly one of coupling_g and nu0 (both given)"
            )
        if coupling_g is None and nu0 is None:
            raise ConfigError("solver: one of coupling_g / nu0 is required")
    return SolverConfig(
        grid=build_grid(grid_cfg or s["grid"]),
        coupling_g=coupling_g,
        nu0=nu0,
        rtol=s["rtol"],
        atol=s["atol"],
        max_step_mm=s["max_step_mm"],
        workers=workers if workers is not None else s["workers"],
    )


def output_directory(cfg, cli_out=None):
    """Output directory precedence: CLI flag, config, environment, ./runs."""
    if cli_out:
        return cli_out
    if cfg["output"]["directory"]:
        return cfg["output"]["directory"]
    return os.environ.get("CHIRPPDC_OUTDIR", "runs")
