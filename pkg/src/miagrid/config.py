"""Experiment configuration: a single YAML tree, fully validated before any
computation so a rejected config has no side effects."""

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .accounting import DpSpec
from .attacks import STRATEGIES, VARIANCE_MODES
from .errors import ConfigError
from .hpo import SearchSpace
from .models import Architecture
from .synthdata import DataSpec

STORE_ENV_VAR = "MIAGRID_STORE"


@dataclass
class ExperimentConfig:
    data: DataSpec
    arch: Architecture
    M: int
    S: int
    dp: DpSpec | None
    space: SearchSpace
    hpo_source: str
    strategies: list[str]
    candidate_count: int
    models_per_candidate: int
    variance_mode: str
    fpr_grid: list[float]
    alpha: float
    repeats: int
    seed: int
    output_dir: Path
    store_root: Path = field(init=False)

    def __post_init__(self):
        if self.M < 1:
            raise ConfigError(f"grid.M must be >= 1, got {self.M}")
        if self.S < 1:
            raise ConfigError(f"grid.S must be >= 1, got {self.S}")
        if self.hpo_source not in ("td", "ed"):
            raise ConfigError(f"hpo.hpo_source must be td or ed, got {self.hpo_source}")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ConfigError(f"unknown attack strategy {s!r}")
        if self.variance_mode not in VARIANCE_MODES:
            raise ConfigError(f"unknown variance_mode {self.variance_mode!r}")
        if self.candidate_count < 1 or self.models_per_candidate < 1:
            raise ConfigError("attack.C and attack.N must be >= 1")
        if not self.fpr_grid or not all(0 < f < 1 for f in self.fpr_grid):
            raise ConfigError("eval.fpr_grid must be non-empty with values in (0, 1)")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"eval.alpha must be in (0, 1), got {self.alpha}")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        if self.arch.dim != self.data.dim or self.arch.classes != self.data.classes:
            raise ConfigError("arch dim/classes must match the data spec")
        env_store = os.environ.get(STORE_ENV_VAR)
        self.store_root = Path(env_store) if env_store else self.output_dir / "store"

    @property
    def pool_size(self) -> int:
        # S shots per class per 0.5-inclusion dataset needs 2*S*classes pooled
        return 2 * self.S * self.data.classes


def _section(tree: dict, name: str) -> dict:
    value = tree.get(name)
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"config section {name!r} must be a mapping")
    return value


def load_config(path, seed_override: int | None = None) -> ExperimentConfig:
    try:
        tree = yaml.safe_load(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}")
    if not isinstance(tree, dict):
        raise ConfigError("config root must be a mapping")
    return config_from_tree(tree, seed_override)


def config_from_tree(tree: dict, seed_override: int | None = None) -> ExperimentConfig:
    data = _section(tree, "data")
    arch = _section(tree, "arch")
    grid = _section(tree, "grid")
    hpo = _section(tree, "hpo")
    attack = _section(tree, "attack")
    evl = _section(tree, "eval")
    dp = tree.get("dp")
    try:
        spec = DataSpec(
            dim=int(data.get("dim", 8)),
            classes=int(data.get("classes", 2)),
            class_separation=float(data.get("class_separation", 4.0)),
            noise_sigma=float(data.get("noise_sigma", 1.0)),
            seed=int(data.get("seed", 0)),
        )
        architecture = Architecture(
            kind=str(arch.get("kind", "linear")),
            dim=spec.dim,
            classes=spec.classes,
            hidden_units=int(arch.get("hidden_units", 0)),
        )
        dp_spec = (
            None
            if dp is None
            else DpSpec(epsilon=float(dp["epsilon"]), delta=float(dp["delta"]))
        )
        space = SearchSpace(
            trials=int(hpo.get("trials", 20)),
            epochs=int(hpo.get("epochs", 40)),
        )
        return ExperimentConfig(
            data=spec,
            arch=architecture,
            M=int(grid.get("M", 16)),
            S=int(grid.get("S", 25)),
            dp=dp_spec,
            space=space,
            hpo_source=str(hpo.get("hpo_source", "td")),
            strategies=[str(s) for s in attack.get("strategies", ["lira"])],
            candidate_count=int(attack.get("C", 4)),
            models_per_candidate=int(attack.get("N", 2)),
            variance_mode=str(attack.get("variance_mode", "per_example")),
            fpr_grid=[float(f) for f in evl.get("fpr_grid", [1e-3, 1e-2, 1e-1])],
            alpha=float(evl.get("alpha", 0.05)),
            repeats=int(tree.get("repeats", 1)),
            seed=int(tree["seed"]) if seed_override is None else seed_override,
            output_dir=Path(tree.get("output_dir", "out")),
        )
    except KeyError as exc:
        raise ConfigError(f"config is missing required key: {exc}")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config value has the wrong type: {exc}")
