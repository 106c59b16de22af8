"""Run configuration: INI-style `key = value` lines grouped in sections.

Unknown sections or keys are rejected so that typos cannot silently fall
back to defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .forest import HyperGrid

PLOT_KINDS = ("space", "zones", "roc", "apoe4", "reversion", "control_age")


def _ints(text):
    return [int(v) for v in _items(text)]


def _items(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _depths(text):
    return [None if v.lower() in ("none", "unlimited") else int(v) for v in _items(text)]


def _mtry(text):
    out = []
    for v in _items(text):
        out.append(int(v) if v.isdigit() else v)
    for v in out:
        if isinstance(v, str) and v not in ("sqrt", "third", "all"):
            raise ConfigError(f"mtry option {v!r} must be an integer, sqrt, third or all")
    return out


def _opt_int(text):
    return None if text.strip().lower() in ("", "none") else int(text)


def _opt_str(text):
    return text.strip() or None


@dataclass
class RunSection:
    horizon: int = 24
    seed: int = 0
    out: str = "progspace-run"


@dataclass
class SynthSection:
    n_subjects: int | None = None  # None: the horizon's default profile
    reversion_fraction: float = 0.05
    missing_rate: float = 0.05
    noise_sd: float = 0.05
    seed: int | None = None


@dataclass
class CohortSection:
    input: str | None = None
    schema: str | None = None
    truth: str | None = None  # optional planted-truth sidecar for external synthetic cohorts


@dataclass
class NmfSection:
    rank: int = 2
    seed: int | None = None
    tol: float = 1e-6
    max_iter: int = 2000


@dataclass
class GmmSection:
    k_min: int = 1
    k_max: int = 6
    restarts: int = 5
    reg: float = 1e-6
    tol: float = 1e-6
    max_iter: int = 500
    zones_k: int = 3
    seed: int | None = None


@dataclass
class ForestSection:
    n_trees: list = field(default_factory=lambda: [100, 300])
    max_depth: list = field(default_factory=lambda: [8, 16, None])
    mtry: list = field(default_factory=lambda: ["sqrt", "third"])
    min_samples_leaf: list = field(default_factory=lambda: [1, 5])
    seed: int | None = None

    def grid(self) -> HyperGrid:
        return HyperGrid(list(self.n_trees), list(self.max_depth), list(self.mtry), list(self.min_samples_leaf))


@dataclass
class CvSection:
    folds: int = 5
    seed: int | None = None


@dataclass
class PlotSection:
    kinds: list = field(default_factory=lambda: list(PLOT_KINDS))


PARSERS = {
    "run": {"horizon": int, "seed": int, "out": str},
    "synth": {"n_subjects": _opt_int, "reversion_fraction": float, "missing_rate": float,
              "noise_sd": float, "seed": _opt_int},
    "cohort": {"input": _opt_str, "schema": _opt_str, "truth": _opt_str},
    "nmf": {"rank": int, "seed": _opt_int, "tol": float, "max_iter": int},
    "gmm": {"k_min": int, "k_max": int, "restarts": int, "reg": float, "tol": float, "max_iter": int,
            "zones_k": int, "seed": _opt_int},
    "forest": {"n_trees": _ints, "max_depth": _depths, "mtry": _mtry, "min_samples_leaf": _ints,
               "seed": _opt_int},
    "cv": {"folds": int, "seed": _opt_int},
    "plot": {"kinds": _items},
}


@dataclass
class PipelineConfig:
    run: RunSection = field(default_factory=RunSection)
    synth: SynthSection = field(default_factory=SynthSection)
    cohort: CohortSection = field(default_factory=CohortSection)
    nmf: NmfSection = field(default_factory=NmfSection)
    gmm: GmmSection = field(default_factory=GmmSection)
    forest: ForestSection = field(default_factory=ForestSection)
    cv: CvSection = field(default_factory=CvSection)
    plot: PlotSection = field(default_factory=PlotSection)

    def seed_for(self, section: str) -> int:
        s = getattr(getattr(self, section), "seed", None)
        return self.run.seed if s is None else s

    @property
    def out(self) -> Path:
        return Path(self.run.out)

    def validate(self) -> "PipelineConfig":
        r = self
        if r.run.horizon not in (24, 48):
            raise ConfigError("run.horizon must be 24 or 48")
        if r.run.seed < 0 or r.run.seed >= 2**64:
            raise ConfigError("run.seed must be an unsigned 64-bit integer")
        if r.nmf.rank != 2:
            raise ConfigError("the progression space needs nmf.rank = 2")
        if r.nmf.tol <= 0 or r.nmf.max_iter < 1:
            raise ConfigError("nmf.tol must be positive and nmf.max_iter at least 1")
        if not 1 <= r.gmm.k_min <= r.gmm.k_max:
            raise ConfigError("gmm k range must satisfy 1 <= k_min <= k_max")
        if r.gmm.restarts < 1 or r.gmm.reg <= 0 or r.gmm.tol <= 0 or r.gmm.max_iter < 1:
            raise ConfigError("gmm restarts, reg, tol and max_iter must be positive")
        if r.gmm.zones_k != 3:
            raise ConfigError("zone labeling needs gmm.zones_k = 3")
        for name in ("n_trees", "max_depth", "mtry", "min_samples_leaf"):
            if not getattr(r.forest, name):
                raise ConfigError(f"forest.{name} needs at least one option")
        if any(t < 1 for t in r.forest.n_trees) or any(m < 1 for m in r.forest.min_samples_leaf):
            raise ConfigError("forest.n_trees and forest.min_samples_leaf options must be positive")
        if any(d is not None and d < 0 for d in r.forest.max_depth):
            raise ConfigError("forest.max_depth options must be non-negative")
        if r.cv.folds < 2:
            raise ConfigError("cv.folds must be at least 2")
        if not 0 <= r.synth.reversion_fraction <= 0.1:
            raise ConfigError("synth.reversion_fraction must lie in [0, 0.1]")
        if not 0 <= r.synth.missing_rate < 1:
            raise ConfigError("synth.missing_rate must lie in [0, 1)")
        bad = [k for k in r.plot.kinds if k not in PLOT_KINDS]
        if bad:
            raise ConfigError(f"unknown plot kinds {bad}; choose from {', '.join(PLOT_KINDS)}")
        return self

    def echo(self) -> list[str]:
        """Resolved configuration as `section.key = value` lines."""
        out = []
        for sect in fields(self):
            obj = getattr(self, sect.name)
            for f in fields(obj):
                v = getattr(obj, f.name)
                if isinstance(v, list):
                    v = ", ".join("none" if x is None else str(x) for x in v)
                out.append(f"{sect.name}.{f.name} = {v}")
        return out


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=("#",))
    cp.optionxform = str
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
    cfg = PipelineConfig()
    for section in cp.sections():
        if section not in PARSERS:
            raise ConfigError(f"unknown config section [{section}]")
        target = getattr(cfg, section)
        for key, raw in cp.items(section):
            if key not in PARSERS[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            try:
                setattr(target, key, PARSERS[section][key](raw))
            except ConfigError:
                raise
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{section}.{key}: {exc}") from None
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        section, key = dotted.split(".")
        setattr(getattr(cfg, section), key, value)
    return cfg.validate()
