"""Train, evaluate, sweep and generalization probes driven by ExperimentConfig."""
from __future__ import annotations

import csv
import json
import logging
import time
import traceback
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List

import numpy as np

from ..checkpoint import load_model, save_model
from ..errors import ConfigurationError
from ..rollout import (EVAL, episode_rngs, expert_controller, local_expert_controller,
                       model_controller, run_episode, steps_for)
from ..swarm import write_trajectory
from ..training import train
from .config import ExperimentConfig, dump_config

log = logging.getLogger(__name__)

METRICS_HEADER = ["step", "time_s", "mean_velocity_variance", "std_velocity_variance"]
SWEEP_HEADER = ["model", "layers", "width", "final_mean_var", "final_std_var", "train_seconds"]


@dataclass
class MetricSeries:
    mean: np.ndarray
    std: np.ndarray
    dt: float

    @property
    def final_mean(self) -> float:
        return float(self.mean[-1])

    @property
    def final_std(self) -> float:
        return float(self.std[-1])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(METRICS_HEADER)
            for k, (m, s) in enumerate(zip(self.mean, self.std)):
                w.writerow([k, repr(round(k * self.dt, 10)), repr(float(m)), repr(float(s))])


def _out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {out}: {exc}") from exc
    return out


def resolve_controller(cfg: ExperimentConfig, model=None):
    """Controller for cfg.model, loading cfg.checkpoint for learned kinds."""
    if cfg.model == "expert":
        return expert_controller
    if cfg.model == "local-expert":
        return local_expert_controller
    if model is None:
        if cfg.checkpoint is None:
            raise ConfigurationError(f"model kind {cfg.model!r} needs a checkpoint")
        model = load_model(cfg.checkpoint)
    if model.kind != cfg.model:
        raise ConfigurationError(
            f"checkpoint holds a {model.kind} model but config asks for {cfg.model}")
    if model.widths[0] != (3 if cfg.model == "invariant" else 6):
        raise ConfigurationError(f"checkpoint input width {model.widths[0]} does not match features")
    return model_controller(model)


def evaluate(cfg: ExperimentConfig, model=None, write: bool = True,
             tag: str = "") -> MetricSeries:
    """Roll out ``eval_episodes`` shared-seed episodes and aggregate variance."""
    controller = resolve_controller(cfg, model)
    sim = cfg.sim()
    steps = steps_for(cfg.episode_seconds, cfg.dt)
    out = _out(cfg) if write else None
    curves = []
    for e in range(cfg.eval_episodes):
        dyn, frames, _ = episode_rngs(cfg.seed, e, purpose=EVAL)
        ep = run_episode(controller, cfg.n_agents, sim, steps, dyn, frames,
                         comm_radius=cfg.eval_comm_radius,
                         keep_states=write and cfg.write_trajectories)
        curves.append(ep.variance)
        if out is not None and cfg.write_trajectories:
            tdir = out / f"trajectories{tag}"
            tdir.mkdir(exist_ok=True)
            write_trajectory(tdir / f"episode_{e:03d}.csv", ep.states)
    curves = np.asarray(curves)
    series = MetricSeries(curves.mean(axis=0), curves.std(axis=0), cfg.dt)
    if out is not None:
        dump_config(cfg, out / "config.yaml")
        series.write_csv(out / f"metrics{tag}.csv")
    return series


def extended_run(cfg: ExperimentConfig, model=None, seconds: float = 5.0,
                 write: bool = True) -> MetricSeries:
    """Evaluation over longer episodes; no retraining."""
    return evaluate(replace(cfg, episode_seconds=seconds), model, write)


def reduced_radius_run(cfg: ExperimentConfig, model=None, radius: float = 0.8,
                       write: bool = True) -> MetricSeries:
    """Evaluation with the controllers' communication radius overridden."""
    return evaluate(replace(cfg, eval_comm_radius=radius), model, write)


def train_model(cfg: ExperimentConfig, write: bool = True):
    if cfg.model not in ("invariant", "baseline"):
        raise ConfigurationError(f"cannot train model kind {cfg.model!r}")
    out = _out(cfg) if write else None
    model, history = train(cfg.dagger(), cfg.model, cfg.hidden,
                           history_path=None if out is None else out / "history.jsonl",
                           angle_encoding=cfg.angle_encoding)
    if out is not None:
        dump_config(cfg, out / "config.yaml")
        save_model(model, out / "model.json")
    return model, history


def sweep(cfg: ExperimentConfig) -> List[dict]:
    """Train and evaluate every (layers, width) cell for each configured kind."""
    out = _out(cfg)
    dump_config(cfg, out / "config.yaml")
    rows, failures = [], []
    for kind in cfg.sweep_kinds:
        for layers in cfg.sweep_layers:
            for width in cfg.sweep_widths:
                cell = replace(cfg, model=kind, layers=layers, width=width,
                               out_dir=str(out / f"{kind}_L{layers}_W{width}"),
                               checkpoint=None)
                try:
                    t0 = time.perf_counter()
                    model, _ = train_model(cell)
                    elapsed = time.perf_counter() - t0
                    series = evaluate(cell, model)
                except Exception as exc:  # continue-on-error, recorded below
                    log.exception("sweep cell %s L%d W%d failed", kind, layers, width)
                    failures.append({"model": kind, "layers": layers, "width": width,
                                     "error": repr(exc),
                                     "traceback": traceback.format_exc()})
                    continue
                rows.append({"model": kind, "layers": layers, "width": width,
                             "final_mean_var": series.final_mean,
                             "final_std_var": series.final_std,
                             "train_seconds": elapsed if cfg.record_timing else None})
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_HEADER)
        for r in rows:
            w.writerow([r["model"], r["layers"], r["width"], repr(r["final_mean_var"]),
                        repr(r["final_std_var"]),
                        "" if r["train_seconds"] is None else f"{r['train_seconds']:.3f}"])
    (out / "failures.json").write_text(json.dumps(failures, indent=2))
    return rows
