"""DAGGER imitation of the fully connected expert, fitted with Adam."""
from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .baseline import BaselineGNN
from .cvnet import InvariantGNN
from .errors import ConfigurationError, SimulationFault, TrainingFault
from .expert import nominal_control
from .rollout import TRAIN, episode_rngs, run_episode, steps_for
from .swarm import EncodedGraph, SimConfig, batch_graphs

log = logging.getLogger(__name__)


def msae_loss(u, u_nom) -> float:
    u = np.asarray(u, dtype=np.complex128)
    u_nom = np.asarray(u_nom, dtype=np.complex128)
    if u.shape != u_nom.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {u_nom.shape}")
    if u.size == 0:
        raise ValueError("MSAE of an empty set is undefined")
    d = u_nom - u
    return float(np.mean(d.real ** 2 + d.imag ** 2))


def loss_and_grads(model, graph: EncodedGraph, target: np.ndarray):
    """Pooled mean squared error over all nodes and its parameter gradients.

    ``target`` is the complex body-frame expert action per node; the baseline
    compares against its (re, im) pair.
    """
    n = graph.n
    if isinstance(model, InvariantGNN):
        u, cache = model.forward(graph)
        loss = msae_loss(u, target)
        upstream = 2.0 * (u - target) / n
    else:
        out, cache = model.forward(graph)
        t2 = np.stack([target.real, target.imag], axis=1)
        diff = out - t2
        loss = float(np.mean(np.sum(diff * diff, axis=1)))
        upstream = 2.0 * diff / n
    return loss, model.backward(cache, upstream)


def _real_view(a: np.ndarray) -> np.ndarray:
    return a.view(np.float64) if np.iscomplexobj(a) else a


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(state: AdamState, params: Dict[str, np.ndarray],
              grads: Dict[str, np.ndarray]) -> AdamState:
    """In-place bias-corrected Adam over every real coordinate.

    Complex parameters are updated through their float64 (re, im) view.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingFault(f"non-finite gradient for {name}")
    state.t += 1
    b1t = 1.0 - state.beta1 ** state.t
    b2t = 1.0 - state.beta2 ** state.t
    for name, p in params.items():
        g = _real_view(np.ascontiguousarray(grads[name], dtype=p.dtype))
        pr = _real_view(p)
        if g.shape != pr.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {pr.shape} for {name}")
        m = state.m.setdefault(name, np.zeros_like(pr))
        v = state.v.setdefault(name, np.zeros_like(pr))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        pr -= state.lr * (m / b1t) / (np.sqrt(v / b2t) + state.eps)
    return state


@dataclass(frozen=True)
class Sample:
    graph: EncodedGraph
    target: np.ndarray


class ReplayBuffer:
    """FIFO store of expert-labelled graphs; capacity counted in node samples."""

    def __init__(self, capacity: int = 50_000):
        if capacity <= 0:
            raise ConfigurationError("buffer capacity must be positive")
        self.capacity = capacity
        self._samples: deque = deque()
        self.node_count = 0

    def __len__(self) -> int:
        return len(self._samples)

    def __getitem__(self, i) -> Sample:
        return self._samples[i]

    def append(self, graph: EncodedGraph, target: np.ndarray) -> None:
        target = np.array(target, dtype=np.complex128)
        if graph.n > self.capacity:
            raise ConfigurationError(f"a {graph.n}-node sample exceeds buffer capacity")
        for arr in (graph.features, graph.receivers, graph.senders, graph.msg_rot, target):
            arr.setflags(write=False)
        self._samples.append(Sample(graph, target))
        self.node_count += graph.n
        while self.node_count > self.capacity:
            self.node_count -= self._samples.popleft().graph.n


@dataclass(frozen=True)
class DaggerConfig:
    iterations: int = 10
    episodes_per_iteration: int = 4
    episode_seconds: float = 2.0
    beta_decay: float = 0.5
    batch_size: int = 32
    epochs: int = 20
    n_agents: int = 30
    buffer_capacity: int = 50_000
    lr: float = 1e-3
    sim: SimConfig = field(default_factory=SimConfig)
    seed: int = 0

    def __post_init__(self):
        for name in ("iterations", "episodes_per_iteration", "batch_size",
                     "epochs", "n_agents", "buffer_capacity"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if not (self.episode_seconds > 0 and self.lr > 0):
            raise ConfigurationError("episode_seconds and lr must be positive")
        if not 0.0 <= self.beta_decay <= 1.0:
            raise ConfigurationError("beta_decay must lie in [0, 1]")

    def beta(self, k: int) -> float:
        """Expert mixture probability for 1-based iteration k."""
        return self.beta_decay ** (k - 1)


def dagger_iteration(k: int, config: DaggerConfig, model, buffer: ReplayBuffer,
                     beta: Optional[float] = None) -> dict:
    """Collect one iteration of expert-labelled rollouts into ``buffer``.

    At every step the whole swarm executes the expert action with
    probability beta, otherwise the learner's.
    """
    beta = config.beta(k) if beta is None else beta
    steps = steps_for(config.episode_seconds, config.sim.dt)
    curves = []
    for e in range(config.episodes_per_iteration):
        dyn, frames, mix = episode_rngs(config.seed, k * 10_000 + e, purpose=TRAIN)

        def control(s, g):
            u_nom = nominal_control(s)
            buffer.append(g, u_nom)
            if mix.random() < beta:
                return u_nom
            return model.act(g)

        try:
            ep = run_episode(control, config.n_agents, config.sim, steps, dyn, frames,
                             keep_states=False)
        except SimulationFault as exc:
            raise SimulationFault(f"iteration {k} episode {e}: {exc}") from exc
        curves.append(ep.variance)
    return {"iter": k, "beta": beta,
            "rollout_velocity_variance_curve": np.mean(curves, axis=0).tolist()}


def fit_epoch(model, buffer: ReplayBuffer, adam: AdamState, batch_size: int,
              rng: np.random.Generator) -> float:
    if len(buffer) == 0:
        raise ConfigurationError("cannot fit on an empty buffer")
    order = rng.permutation(len(buffer))
    losses = []
    params = model.params()
    for start in range(0, len(order), batch_size):
        batch = [buffer[int(i)] for i in order[start:start + batch_size]]
        graph = batch_graphs([b.graph for b in batch])
        target = np.concatenate([b.target for b in batch])
        loss, grads = loss_and_grads(model, graph, target)
        if not np.isfinite(loss):
            raise TrainingFault(f"non-finite loss {loss}")
        adam_step(adam, params, grads)
        losses.append(loss)
    model.canonicalize()
    return float(np.mean(losses))


def make_model(kind: str, hidden: Sequence[int], rng: np.random.Generator,
               angle_encoding: str = "raw"):
    if kind == "invariant":
        return InvariantGNN.init(hidden, rng)
    if kind == "baseline":
        return BaselineGNN.init(hidden, rng, angle_encoding=angle_encoding)
    raise ConfigurationError(f"unknown trainable model kind {kind!r}")


def train(config: DaggerConfig, kind: str = "invariant", hidden: Sequence[int] = (8, 8),
          model=None, history_path=None, angle_encoding: str = "raw"):
    """K rounds of (collect, fit). Returns the model and per-iteration history."""
    root = np.random.SeedSequence([config.seed, 0xDA66E2])
    init_rng, fit_rng = (np.random.default_rng(s) for s in root.spawn(2))
    if model is None:
        model = make_model(kind, hidden, init_rng, angle_encoding)
    buffer = ReplayBuffer(config.buffer_capacity)
    adam = AdamState(lr=config.lr)
    history: List[dict] = []
    for k in range(1, config.iterations + 1):
        record = dagger_iteration(k, config, model, buffer)
        epoch_losses = [fit_epoch(model, buffer, adam, config.batch_size, fit_rng)
                        for _ in range(config.epochs)]
        record["mean_loss"] = float(np.mean(epoch_losses))
        record["final_epoch_loss"] = epoch_losses[-1]
        record["buffer_graphs"] = len(buffer)
        history.append(record)
        log.info("iter %d beta %.3f loss %.4g final var %.4g", k, record["beta"],
                 record["mean_loss"], record["rollout_velocity_variance_curve"][-1])
    if history_path is not None:
        write_history(history, history_path)
    return model, history


def write_history(history: List[dict], path) -> None:
    keys = ("iter", "beta", "mean_loss", "rollout_velocity_variance_curve")
    with open(path, "w") as fh:
        for rec in history:
            fh.write(json.dumps({k: rec[k] for k in keys}) + "\n")
