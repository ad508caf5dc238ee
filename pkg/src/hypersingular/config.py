"""Run configuration: JSON file, dotted overrides and validation."""
from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass

from .errors import HypersingularError
from .kernel import kernel_from_dict
from .params import OperatorParams
from .profiles import profile_from_dict

__all__ = ["ConfigError", "DEFAULTS", "RunConfig", "load_config", "apply_override",
           "parse_json_text"]


class ConfigError(HypersingularError, ValueError):
    """Bad configuration; the message names the offending key."""


DEFAULTS = {
    "profile": {"kind": "monomial", "gamma": 3.0},
    "kernel": {"harmonics": [{"k": 1, "a": 1.0, "b": 0.0}]},
    "alpha": 0.25,
    "beta": 1.0,
    "n": 2,
    "seed": 0,
    "tol": 1e-8,
    "l_window": [-20, 20],
    "lambda_budget": 1e4,
    "epsilon_safety": 0.5,
    # when set, epsilon = epsilon_factor * (bound), for deliberately broken runs
    "epsilon_factor": None,
    "cache_dir": None,
    "certificate": {"r_min": 1e-3, "r_max": 1e3, "n_samples": 10000},
    "grid": {"dims": [64, 64, 64], "box_length": 16.0},
    "lemma": {"n_configs": 200, "grid": [101, 101], "xi_max": 1e6, "l_max": 10,
              "critical_fraction": 0.5, "patches_per_config": 0, "n_check": 9},
    "multiplier": {"xis": [[1.0, 0.0, 1.0], [0.0, 0.0, 0.0], [2.0, -1.0, 0.5]],
                   "levels": [-4, 4], "method": "radial", "polar_check": True,
                   "polar_check_budget": 2e3},
    "decay": {"xis": [[1.0, 0.0, 0.0], [0.6, 0.8, 1e-5], [3.0, -1.0, 1e-5],
                      [0.2, 0.1, 1e-6], [2.0, 2.0, 0.0]],
              "windows": [[1, 10], [-10, -1]], "slack": 10.0},
    "envelope": {"directions": [[1.0, 0.0, 0.0], [0.6, 0.8, 0.0],
                                [0.3, 0.2, 0.93], [0.1, -0.25, 0.96]],
                 "magnitudes": [10.0, 100.0, 1000.0, 10000.0], "slack": 10.0,
                 "ladder": [0, 8], "ladder_width": 0.5, "ladder_nodes": 6,
                 "ladder_budget": 2e3, "ladder_s": None},
    "apply": {"probes": [[0.0, 0.0, 0.0], [0.5, 0.0, 1.0], [-1.0, 0.5, 2.0], [1.0, 1.0, -1.0],
                         [0.0, -1.5, 0.5], [2.0, 0.0, 3.0], [-0.5, -0.5, -0.5],
                         [0.25, 0.75, 1.5]],
              "r_inner": 0.25, "r_outer": 4.0, "levels": [-1, 0, 1], "width": 1.0,
              "threshold": 5e-2, "smoke_sizes": [16, 32], "smoke_box": 8.0},
    "sweep": {"p_list": [1.5, 2.0, 3.0], "n_functions": 20, "table_budget": 2e3,
              "l1_levels": [0, 8], "slack": 10.0},
}

_LAST_KEY = re.compile(r'"([^"\\]+)"\s*:')


def parse_json_text(text: str, source: str = "<config>") -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        keys = _LAST_KEY.findall(text[:exc.pos])
        near = f" (after key {keys[-1]!r})" if keys else ""
        raise ConfigError(f"{source}: invalid JSON at line {exc.lineno} column {exc.colno}"
                          f"{near}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be an object")
    return data


def _merge(base: dict, new: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in new.items():
        where = f"{path}{k}"
        if k not in base:
            raise ConfigError(f"unknown key {where!r}")
        if isinstance(base[k], dict) and k not in ("profile", "kernel"):
            if not isinstance(v, dict):
                raise ConfigError(f"key {where!r} must be an object")
            out[k] = _merge(base[k], v, where + ".")
        else:
            out[k] = copy.deepcopy(v)
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(data: dict, item: str) -> dict:
    """Apply ``key.sub=value`` to a merged config; value is parsed as JSON
    when possible.  Keys must already exist, except inside the free-form
    ``profile`` and ``kernel`` objects."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, text = item.split("=", 1)
    parts = key.strip().split(".")
    data = copy.deepcopy(data)
    node = data
    free = False
    for i, p in enumerate(parts):
        if not isinstance(node, dict):
            raise ConfigError(f"key {'.'.join(parts[:i])!r} is not an object")
        if p not in node and not free:
            raise ConfigError(f"unknown key {'.'.join(parts[:i + 1])!r}")
        if i == len(parts) - 1:
            node[p] = _parse_value(text)
        else:
            free = free or p in ("profile", "kernel")
            node = node.setdefault(p, {})
    return data


@dataclass(frozen=True)
class RunConfig:
    data: dict

    @classmethod
    def from_dict(cls, data: dict, overrides=()) -> "RunConfig":
        merged = _merge(DEFAULTS, data)
        for item in overrides:
            merged = apply_override(merged, item)
        cfg = cls(merged)
        cfg.validate()
        return cfg

    def __getitem__(self, key):
        return self.data[key]

    def section(self, name: str) -> dict:
        return self.data[name]

    def validate(self):
        d = self.data
        for key in ("alpha", "beta", "tol", "lambda_budget", "epsilon_safety"):
            if not isinstance(d[key], (int, float)) or isinstance(d[key], bool):
                raise ConfigError(f"key {key!r} must be a number")
        if not isinstance(d["seed"], int) or d["seed"] < 0 or d["seed"] >= 2 ** 64:
            raise ConfigError("key 'seed' must be an unsigned 64-bit integer")
        lw = d["l_window"]
        if not (isinstance(lw, list) and len(lw) == 2 and lw[0] < 0 < lw[1]):
            raise ConfigError("key 'l_window' must be [l_min, l_max] with l_min < 0 < l_max")
        try:
            self.params()
        except HypersingularError as exc:
            raise ConfigError(f"keys 'alpha'/'beta'/'n': {exc}") from None
        try:
            self.profile()
        except HypersingularError as exc:
            raise ConfigError(f"key 'profile': {exc}") from None
        try:
            self.kernel()
        except (HypersingularError, KeyError, TypeError) as exc:
            raise ConfigError(f"key 'kernel': {exc}") from None
        g = d["grid"]
        if len(g["dims"]) != 3:
            raise ConfigError("key 'grid.dims' must list three sizes")

    def params(self) -> OperatorParams:
        d = self.data
        return OperatorParams(int(d["n"]), float(d["alpha"]), float(d["beta"]))

    def profile(self):
        return profile_from_dict(self.data["profile"])

    def kernel(self):
        return kernel_from_dict(self.data["kernel"])

    def to_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))


def load_config(path=None, overrides=()) -> RunConfig:
    data = {}
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
        data = parse_json_text(text, str(path))
    return RunConfig.from_dict(data, overrides)
