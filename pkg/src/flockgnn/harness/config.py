"""Experiment configuration: one YAML key-value document per experiment."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import List, Optional

import yaml

from ..errors import ConfigurationError
from ..swarm import SimConfig
from ..training import DaggerConfig

MODEL_KINDS = ("invariant", "baseline", "expert", "local-expert")
LAYER_CHOICES = (2, 3, 4)
WIDTH_CHOICES = (8, 16, 32)
CONFIG_VERSION = 1


@dataclass(frozen=True)
class TrainSection:
    iterations: int = 10
    episodes_per_iteration: int = 4
    episode_seconds: float = 2.0
    beta_decay: float = 0.5
    batch_size: int = 32
    epochs: int = 20
    n_agents: int = 30
    buffer_capacity: int = 50_000
    lr: float = 1e-3


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "invariant"
    layers: int = 2
    width: int = 8
    n_agents: int = 30
    episode_seconds: float = 2.0
    comm_radius: float = 1.0
    # evaluation-only override of the controllers' radius; placement keeps comm_radius
    eval_comm_radius: Optional[float] = None
    eval_episodes: int = 20
    seed: int = 0
    out_dir: str = "runs/default"
    checkpoint: Optional[str] = None
    angle_encoding: str = "raw"
    dt: float = 0.01
    frame_jitter_std: float = 0.1
    min_separation: float = 0.2
    max_speed: float = 1.0
    area_radius: Optional[float] = None
    write_trajectories: bool = True
    record_timing: bool = False
    sweep_kinds: List[str] = field(default_factory=lambda: ["invariant", "baseline"])
    sweep_layers: List[int] = field(default_factory=lambda: list(LAYER_CHOICES))
    sweep_widths: List[int] = field(default_factory=lambda: list(WIDTH_CHOICES))
    train: TrainSection = field(default_factory=TrainSection)
    version: int = CONFIG_VERSION

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ConfigurationError(f"model must be one of {MODEL_KINDS}, got {self.model!r}")
        if self.layers not in LAYER_CHOICES:
            raise ConfigurationError(f"layers must be one of {LAYER_CHOICES}, got {self.layers}")
        if self.width not in WIDTH_CHOICES:
            raise ConfigurationError(f"width must be one of {WIDTH_CHOICES}, got {self.width}")
        if not set(self.sweep_layers) <= set(LAYER_CHOICES) or \
                not set(self.sweep_widths) <= set(WIDTH_CHOICES):
            raise ConfigurationError("sweep layers/widths outside the allowed grid")
        if not set(self.sweep_kinds) <= {"invariant", "baseline"}:
            raise ConfigurationError("sweep_kinds may only contain trainable kinds")
        if self.angle_encoding not in ("raw", "cossin"):
            raise ConfigurationError(f"unknown angle_encoding {self.angle_encoding!r}")
        if self.n_agents < 2 or self.eval_episodes < 1 or self.episode_seconds <= 0:
            raise ConfigurationError("need n_agents >= 2, eval_episodes >= 1, episode_seconds > 0")
        if self.version != CONFIG_VERSION:
            raise ConfigurationError(f"unsupported config version {self.version}")
        if self.eval_comm_radius is not None and not self.eval_comm_radius > 0:
            raise ConfigurationError("eval_comm_radius must be > 0")
        self.sim()  # validates physical parameters

    @property
    def hidden(self) -> List[int]:
        return [self.width] * self.layers

    def sim(self, comm_radius: Optional[float] = None) -> SimConfig:
        return SimConfig(comm_radius=self.comm_radius if comm_radius is None else comm_radius,
                         dt=self.dt, frame_jitter_std=self.frame_jitter_std,
                         area_radius=self.area_radius, min_separation=self.min_separation,
                         max_speed=self.max_speed, seed=self.seed)

    def dagger(self) -> DaggerConfig:
        t = self.train
        return DaggerConfig(iterations=t.iterations,
                            episodes_per_iteration=t.episodes_per_iteration,
                            episode_seconds=t.episode_seconds, beta_decay=t.beta_decay,
                            batch_size=t.batch_size, epochs=t.epochs, n_agents=t.n_agents,
                            buffer_capacity=t.buffer_capacity, lr=t.lr,
                            sim=self.sim(), seed=self.seed)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data or {})
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    train = data.pop("train", None) or {}
    tknown = {f.name for f in fields(TrainSection)}
    if set(train) - tknown:
        raise ConfigurationError(f"unknown train keys: {sorted(set(train) - tknown)}")
    try:
        return ExperimentConfig(train=TrainSection(**train), **data)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigurationError(f"{path} must hold a key-value mapping")
    return config_from_dict(data)


def dump_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=True))
