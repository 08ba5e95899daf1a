"""Experiment configuration: a YAML file mirroring :class:`ExperimentConfig`.

Example::

    datasets:
      - name: demo
        path: data/demo.tsf          # relative to the config file
        format: tsf                  # tsf | csv
        layout: long                 # csv only: long | wide
        frequency: daily             # optional override
        lag: 14                      # optional override
        g_predictions: data/g.csv    # optional: import g instead of training the MLP
    split: {train: 0.8, val: 0.1}
    standardize: true
    ar: {intercept: false, ridge: 1.0e-8}
    mlp: {epochs: 100, batch_size: 256, learning_rate: 0.001, optimizer: adam, l2: 0.0, hidden_sizes: [64, 64]}
    p_grid: [0.5, 0.6, 0.7, 0.8, 0.9, 0.95]
    floor_points: 100
    selectors: {classifiers: [rnd, lr, rf, rfu], mode: per_series, threshold: 0.5,
                rf_trees: 128, rfu_members: 10, lr_l2: 0.01, max_depth: null, min_leaf: 1}
    seed: 0
    out: runs
    threads: 1
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import AalfError
from .forecasters.mlp import TrainConfig
from .selector import CLASSIFIERS

DEFAULT_P_GRID = (0.5, 0.6, 0.7, 0.8, 0.9, 0.95)


class ConfigError(AalfError, ValueError):
    pass


@dataclass(frozen=True)
class DatasetConfig:
    name: str
    path: str
    format: str = "tsf"
    layout: str = "long"
    frequency: str | None = None
    lag: int | None = None
    g_predictions: str | None = None


@dataclass(frozen=True)
class SelectorConfig:
    classifiers: tuple[str, ...] = CLASSIFIERS
    mode: str = "per_series"
    threshold: float = 0.5
    rf_trees: int = 128
    rfu_members: int = 10
    lr_l2: float = 1e-2
    max_depth: int | None = None
    min_leaf: int = 1
    save_models: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[DatasetConfig, ...]
    train_frac: float = 0.8
    val_frac: float = 0.1
    standardize: bool = True
    ar_intercept: bool = False
    ar_ridge: float = 1e-8
    mlp: TrainConfig = field(default_factory=TrainConfig)
    p_grid: tuple[float, ...] = DEFAULT_P_GRID
    floor_points: int = 100
    selectors: SelectorConfig = field(default_factory=SelectorConfig)
    seed: int = 0
    out: str = "runs"
    threads: int = 1

    def __post_init__(self):
        if not self.datasets:
            raise ConfigError("config lists no datasets")
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise ConfigError(f"dataset names must be unique: {names}")
        for d in self.datasets:
            if d.format not in ("tsf", "csv"):
                raise ConfigError(f"dataset {d.name}: unknown format {d.format!r}")
        if not self.p_grid or any(not 0.0 < p <= 1.0 for p in self.p_grid):
            raise ConfigError("p_grid values must lie in (0, 1]")
        if self.floor_points < 1:
            raise ConfigError("floor_points must be positive")
        unknown = set(self.selectors.classifiers) - set(CLASSIFIERS)
        if unknown:
            raise ConfigError(f"unknown classifiers {sorted(unknown)}; choose from {CLASSIFIERS}")
        if self.selectors.mode not in ("per_series", "global"):
            raise ConfigError("selectors.mode must be per_series or global")
        if not 0.0 < self.selectors.threshold < 1.0:
            raise ConfigError("selectors.threshold must lie in (0, 1)")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")

    # ------------------------------------------------------------------ hashing

    def semantic_dict(self) -> dict:
        """Every field that can change results; output location and thread count excluded."""
        d = dataclasses.asdict(self)
        d.pop("out")
        d.pop("threads")
        # data enter through their content, so relocating a checkout keeps the hash
        d["datasets"] = [
            {
                **{k: v for k, v in ds.items() if k not in ("path", "g_predictions")},
                "sha256": _file_digest(ds["path"]),
                "g_sha256": _file_digest(ds["g_predictions"]),
            }
            for ds in d["datasets"]
        ]
        return d

    def config_hash(self) -> str:
        text = json.dumps(self.semantic_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def run_dir(self) -> Path:
        return Path(self.out) / self.config_hash()[:16]

    def with_overrides(self, seed: int | None = None, out: str | None = None, threads: int | None = None) -> "ExperimentConfig":
        changes = {k: v for k, v in {"seed": seed, "out": out, "threads": threads}.items() if v is not None}
        return dataclasses.replace(self, **changes)


def _file_digest(path: str | None) -> str | None:
    if path is None:
        return None
    p = Path(path)
    if not p.is_file():
        return None
    return hashlib.sha256(p.read_bytes()).hexdigest()


_TOP_KEYS = {"datasets", "split", "standardize", "ar", "mlp", "p_grid", "floor_points", "selectors", "seed", "out", "threads"}


def _check_keys(section: str, given: dict, allowed) -> None:
    extra = set(given) - set(allowed)
    if extra:
        raise ConfigError(f"unknown keys in {section}: {sorted(extra)}")


def config_from_dict(raw: dict, base_dir: Path | str = ".") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    _check_keys("config", raw, _TOP_KEYS)
    base_dir = Path(base_dir)

    datasets = []
    for entry in raw.get("datasets") or []:
        _check_keys("datasets entry", entry, {f.name for f in dataclasses.fields(DatasetConfig)})
        if "name" not in entry or "path" not in entry:
            raise ConfigError("each dataset needs a name and a path")
        entry = dict(entry)
        for key in ("path", "g_predictions"):
            if entry.get(key) is not None:
                entry[key] = str((base_dir / entry[key]).resolve())
        datasets.append(DatasetConfig(**entry))

    split = raw.get("split") or {}
    _check_keys("split", split, {"train", "val"})
    ar = raw.get("ar") or {}
    _check_keys("ar", ar, {"intercept", "ridge"})
    mlp = dict(raw.get("mlp") or {})
    _check_keys("mlp", mlp, {f.name for f in dataclasses.fields(TrainConfig)} - {"seed"})
    if "hidden_sizes" in mlp:
        mlp["hidden_sizes"] = tuple(int(h) for h in mlp["hidden_sizes"])
    sel = dict(raw.get("selectors") or {})
    _check_keys("selectors", sel, {f.name for f in dataclasses.fields(SelectorConfig)})
    if "classifiers" in sel:
        sel["classifiers"] = tuple(str(c).lower() for c in sel["classifiers"])

    return ExperimentConfig(
        datasets=tuple(datasets),
        train_frac=float(split.get("train", 0.8)),
        val_frac=float(split.get("val", 0.1)),
        standardize=bool(raw.get("standardize", True)),
        ar_intercept=bool(ar.get("intercept", False)),
        ar_ridge=float(ar.get("ridge", 1e-8)),
        mlp=TrainConfig(**mlp),
        p_grid=tuple(float(p) for p in raw.get("p_grid", DEFAULT_P_GRID)),
        floor_points=int(raw.get("floor_points", 100)),
        selectors=SelectorConfig(**sel),
        seed=int(raw.get("seed", 0)),
        out=str((base_dir / raw.get("out", "runs")).resolve()),
        threads=int(raw.get("threads", 1)),
    )


def load_config(path: Path | str) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return config_from_dict(raw or {}, path.parent)
