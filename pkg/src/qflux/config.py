"""Experiment configuration: sectioned text files (INI syntax), validated field by field."""
from __future__ import annotations

import ast
import configparser
import io
import math
from dataclasses import dataclass, field

from .profiles import PROFILES

CAMPAIGN_NAMES = ("theorem1", "corollary", "fbi", "grauert", "all")
U64 = 2**64


class ConfigError(ValueError):
    """Validation failure; the message names the offending field as section.key."""


def _floats(s):
    return [float(t) for t in str(s).split(",") if t.strip()]


def _ints(s):
    return [int(t) for t in str(s).split(",") if t.strip()]


def _strs(s):
    return [t.strip() for t in str(s).split(",") if t.strip()]


def _fmt(v):
    if isinstance(v, list):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


# section -> key -> (parser, default)
SCHEMA = {
    "run": {"campaign": (str, "theorem1"), "seed": (int, 0), "out": (str, "qflux_out"), "tasks": (_strs, [])},
    "geometry": {"n": (int, 2), "N": (int, 128), "period": (float, 2.0), "V": (str, "0"), "E": (float, 1.0)},
    "ensemble": {"construction": (str, "full"), "count": (int, 16), "seed": (int, -1),
                 "radii": (_ints, [1105, 1885, 10985]), "sizes": (_ints, [128, 128, 256])},
    "surface": {"c": (float, 0.5), "json": (str, "")},
    "symbol": {"a": (str, "")},
    "cutoff": {"eps_list": (_floats, [0.2, 0.1, 0.05]), "delta_rule": (float, 2.0), "psi_width": (float, 0.2),
               "profile": (str, "bump")},
}


@dataclass
class ExperimentConfig:
    values: dict
    task_overrides: dict = field(default_factory=dict)

    def __getitem__(self, key):
        sec, k = key.split(".")
        return self.values[sec][k]

    def set(self, key, value):
        sec, k = key.split(".")
        self.values[sec][k] = value

    @classmethod
    def defaults(cls) -> "ExperimentConfig":
        return cls({s: {k: (list(d) if isinstance(d, list) else d) for k, (_, d) in keys.items()}
                    for s, keys in SCHEMA.items()})

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"syntax: {exc}") from None
        cfg = cls.defaults()
        for sec in cp.sections():
            if sec.startswith("task."):
                name = sec[5:]
                over = {}
                for k, v in cp[sec].items():
                    try:
                        over[k] = ast.literal_eval(v)
                    except (ValueError, SyntaxError):
                        raise ConfigError(f"{sec}.{k}: expected a number, string or tuple literal") from None
                cfg.task_overrides[name] = over
                continue
            if sec not in SCHEMA:
                raise ConfigError(f"{sec}: unknown section")
            for k, v in cp[sec].items():
                if k not in SCHEMA[sec]:
                    raise ConfigError(f"{sec}.{k}: unknown key")
                try:
                    cfg.values[sec][k] = SCHEMA[sec][k][0](v)
                except ValueError:
                    raise ConfigError(f"{sec}.{k}: cannot parse {v!r}") from None
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def to_text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for sec, keys in self.values.items():
            cp[sec] = {k: _fmt(v) for k, v in keys.items()}
        for name in sorted(self.task_overrides):
            cp[f"task.{name}"] = {k: repr(v) for k, v in sorted(self.task_overrides[name].items())}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def resolved(self) -> dict:
        out = {s: dict(v) for s, v in self.values.items()}
        if out["ensemble"]["seed"] < 0:
            out["ensemble"]["seed"] = out["run"]["seed"]
        out["task_overrides"] = {k: dict(v) for k, v in sorted(self.task_overrides.items())}
        return out

    def validate(self):
        v = self.values
        r, g, e, c = v["run"], v["geometry"], v["ensemble"], v["cutoff"]
        if r["campaign"] not in CAMPAIGN_NAMES:
            raise ConfigError(f"run.campaign: must be one of {', '.join(CAMPAIGN_NAMES)}")
        if not 0 <= r["seed"] < U64:
            raise ConfigError("run.seed: must be an unsigned 64-bit integer")
        if not -1 <= e["seed"] < U64:
            raise ConfigError("ensemble.seed: must be an unsigned 64-bit integer")
        if g["n"] not in (1, 2):
            raise ConfigError("geometry.n: only n = 1 or n = 2 are supported")
        N = g["N"]
        if N < 4 or N & (N - 1):
            raise ConfigError("geometry.N: must be a power of two >= 4")
        for s in e["sizes"]:
            if s < 4 or s & (s - 1):
                raise ConfigError("ensemble.sizes: entries must be powers of two >= 4")
        if not g["period"] > 0:
            raise ConfigError("geometry.period: must be positive")
        if g["V"].strip() not in ("0", "0.0"):
            raise ConfigError("geometry.V: campaigns use the V = 0 surrogate; "
                              "nonzero potentials are available through spectral.lanczos_modes")
        if e["construction"] not in ("full", "random"):
            raise ConfigError("ensemble.construction: must be 'full' or 'random'")
        if e["count"] < 1:
            raise ConfigError("ensemble.count: must be at least 1")
        if not e["radii"]:
            raise ConfigError("ensemble.radii: at least one lattice radius squared is required")
        if e["sizes"] and len(e["sizes"]) != len(e["radii"]):
            raise ConfigError("ensemble.sizes: must match ensemble.radii in length (or be empty)")
        eps = c["eps_list"]
        if not eps or any(x <= 0 for x in eps):
            raise ConfigError("cutoff.eps_list: entries must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("cutoff.eps_list: must be strictly decreasing")
        if not c["delta_rule"] > 1:
            raise ConfigError("cutoff.delta_rule: delta = rule * eps needs rule > 1 (delta > eps)")
        if not c["psi_width"] > 0:
            raise ConfigError("cutoff.psi_width: must be positive")
        if c["profile"] not in PROFILES:
            raise ConfigError(f"cutoff.profile: must be one of {', '.join(sorted(PROFILES))}")
        if 2 * max(eps) * c["delta_rule"] >= g["period"] / 2 - 0.1:
            raise ConfigError("cutoff.eps_list: localizer would overlap the far transition")
        if math.isnan(v["surface"]["c"]):
            raise ConfigError("surface.c: must be a number")
