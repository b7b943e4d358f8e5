"""Experiment configuration: a YAML file plus command-line overrides.

Example::

    dataset:
      synthetic: cos_plus_sin   # or  csv: data.csv
      n: 30
      seed: 7
      box: [[0, 0], [10, 10]]
    norm: 2
    lipschitz: "2:30:29"        # or [2, 4, 16]
    grid: 200
    out: results
    bench:
      sizes: [1, 10, 100, 1000]
      dims: [2]
      queries: 200
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .analysis import LipschitzSchedule
from .dataset import Dataset, get_synthetic, load_csv, sample_synthetic
from .exceptions import ConfigError, NsmError
from .geometry import DomainBox, NormSpec

DEFAULT_SYNTHETIC = "cos_plus_sin"
DEFAULT_SEED = 7
DEFAULT_BOX = ((0.0, 0.0), (10.0, 10.0))


def parse_schedule(spec) -> tuple:
    """``"2,4,16"``, ``"2:30:29"`` (start:stop:count), a number, a list, or a mapping."""
    if isinstance(spec, (int, float)):
        return (float(spec),)
    if isinstance(spec, dict):
        try:
            return tuple(np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["count"])).tolist())
        except KeyError as exc:
            raise ConfigError(f"lipschitz range needs start/stop/count, missing {exc}") from None
    if isinstance(spec, (list, tuple)):
        return tuple(float(v) for v in spec)
    text = str(spec).strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ConfigError(f"range must be start:stop:count, got {text!r}")
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise ConfigError("range count must be positive")
            return tuple(np.linspace(start, stop, count).tolist())
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse Lipschitz schedule {text!r}: {exc}") from None


def parse_box(spec) -> DomainBox:
    """``"0,0:10,10"`` or ``[[0, 0], [10, 10]]``."""
    try:
        if isinstance(spec, str):
            lo, hi = spec.split(":")
            return DomainBox([float(v) for v in lo.split(",")], [float(v) for v in hi.split(",")])
        lo, hi = spec
        return DomainBox(lo, hi)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"cannot parse box {spec!r}: {exc}") from None


@dataclass
class ExperimentConfig:
    csv: Path | None = None
    synthetic: str | None = None
    n: int = 30
    seed: int = DEFAULT_SEED
    box: DomainBox | None = None
    norm: NormSpec = field(default_factory=NormSpec)
    lipschitz: tuple = (2.0,)
    grid: int = 200
    out: Path = Path("out")
    normalize: bool = False
    fastquery_points: int = 2000
    bench_sizes: tuple = (1, 10, 100, 1000, 10000)
    bench_dims: tuple = (2,)
    bench_queries: int = 200
    bench_modes: tuple = ("ceiling",)

    def validate(self) -> "ExperimentConfig":
        if (self.csv is None) == (self.synthetic is None):
            raise ConfigError("give exactly one dataset source (csv path or synthetic id)")
        if self.synthetic is not None:
            get_synthetic(self.synthetic)
        if self.grid < 2:
            raise ConfigError(f"grid needs at least 2 points per axis, got {self.grid}")
        LipschitzSchedule(self.lipschitz)
        if self.n < 1:
            raise ConfigError(f"n must be positive, got {self.n}")
        return self

    @property
    def schedule(self) -> LipschitzSchedule:
        return LipschitzSchedule(self.lipschitz)

    def load_dataset(self) -> Dataset:
        if self.csv is not None:
            return load_csv(self.csv, box=self.box)
        box = self.box
        if box is None:
            fn = get_synthetic(self.synthetic)
            box = DomainBox(*DEFAULT_BOX) if fn.dim in (None, 2) else DomainBox.cube(0.0, 10.0, fn.dim)
        return sample_synthetic(self.synthetic, box, self.n, self.seed)

    def truth(self):
        return get_synthetic(self.synthetic) if self.synthetic is not None else None

    def to_dict(self) -> dict:
        return {
            "dataset": {
                "csv": str(self.csv) if self.csv is not None else None,
                "synthetic": self.synthetic,
                "n": self.n,
                "seed": self.seed,
                "box": None if self.box is None else [list(self.box.lower), list(self.box.upper)],
            },
            "norm": self.norm.label,
            "lipschitz": list(self.lipschitz),
            "grid": self.grid,
        }


def _from_mapping(raw: dict) -> dict:
    out = {}
    ds = raw.get("dataset", {}) or {}
    if not isinstance(ds, dict):
        raise ConfigError("'dataset' must be a mapping")
    if "csv" in ds and ds["csv"] is not None:
        out["csv"] = Path(ds["csv"])
    if "synthetic" in ds and ds["synthetic"] is not None:
        out["synthetic"] = str(ds["synthetic"])
    for key in ("n", "seed"):
        if key in ds:
            out[key] = int(ds[key])
    if ds.get("box") is not None:
        out["box"] = parse_box(ds["box"])
    if "norm" in raw:
        out["norm"] = NormSpec(str(raw["norm"]))
    if "lipschitz" in raw:
        out["lipschitz"] = parse_schedule(raw["lipschitz"])
    if "grid" in raw:
        out["grid"] = int(raw["grid"])
    if "out" in raw:
        out["out"] = Path(raw["out"])
    if "normalize" in raw:
        out["normalize"] = bool(raw["normalize"])
    if "fastquery_points" in raw:
        out["fastquery_points"] = int(raw["fastquery_points"])
    bench = raw.get("bench", {}) or {}
    for key, conv in (("sizes", int), ("dims", int), ("modes", str)):
        if key in bench:
            out[f"bench_{key}"] = tuple(conv(v) for v in bench[key])
    if "queries" in bench:
        out["bench_queries"] = int(bench["queries"])
    return out


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping")
    try:
        return ExperimentConfig(**_from_mapping(raw))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, NsmError):
            raise
        raise ConfigError(f"bad config {path}: {exc}") from None


def merge(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Apply non-None overrides; a csv/synthetic override replaces the other source."""
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if "csv" in overrides:
        overrides.setdefault("synthetic", None)
    elif "synthetic" in overrides:
        overrides.setdefault("csv", None)
    return replace(cfg, **overrides)


def example_preset(out: Path) -> ExperimentConfig:
    """cos(x1) + sin(x2) on [0, 10]^2, 30 uniform samples, l2 norm."""
    return ExperimentConfig(
        synthetic="cos_plus_sin", n=30, seed=DEFAULT_SEED, box=DomainBox(*DEFAULT_BOX),
        norm=NormSpec(2), lipschitz=tuple(float(v) for v in range(2, 31)), grid=200,
        out=out, normalize=True,
    )


PRESET_SURFACE_L = (2.0, 4.0, 16.0)
PRESET_LSTAR_GRID = 500
