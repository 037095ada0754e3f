"""Episode rollouts and seeded random streams.

Each episode gets independent generators derived from (master seed, purpose,
episode index, stream) so that every controller compared in one batch sees
identical initial states and frame-jitter sequences.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .errors import SimulationFault
from .expert import encode, local_nominal_control, nominal_control
from .swarm import EncodedGraph, SimConfig, SwarmState, init_swarm, step_dynamics, velocity_variance

Controller = Callable[[SwarmState, EncodedGraph], np.ndarray]

TRAIN, EVAL = 1, 2
_DYNAMICS, _FRAMES, _MIXING = 0, 1, 2


def episode_rngs(seed: int, episode: int, purpose: int = EVAL, frame_salt: int = 0):
    """(dynamics, frames, mixing) generators for one episode."""
    def make(stream, salt=0):
        return np.random.default_rng(np.random.SeedSequence([seed, purpose, episode, stream, salt]))
    return make(_DYNAMICS), make(_FRAMES, frame_salt), make(_MIXING)


def expert_controller(s: SwarmState, g: EncodedGraph) -> np.ndarray:
    return nominal_control(s)


def local_expert_controller(s: SwarmState, g: EncodedGraph) -> np.ndarray:
    return local_nominal_control(s, g)


def model_controller(model) -> Controller:
    def control(s, g):
        return model.act(g)
    return control


@dataclass
class Episode:
    states: List[SwarmState]
    variance: np.ndarray      # velocity variance at steps 0..steps


def run_episode(controller: Controller, n: int, cfg: SimConfig, steps: int,
                dyn_rng: np.random.Generator, frame_rng: np.random.Generator,
                comm_radius: Optional[float] = None,
                keep_states: bool = True,
                initial: Optional[SwarmState] = None) -> Episode:
    C = cfg.comm_radius if comm_radius is None else comm_radius
    s = init_swarm(n, cfg, dyn_rng, frame_rng) if initial is None else initial
    states = [s]
    var = [velocity_variance(s)]
    for k in range(steps):
        try:
            g = encode(s, C)
            u = controller(s, g)
            s = step_dynamics(s, u, cfg.dt, cfg.frame_jitter_std, frame_rng)
        except SimulationFault as exc:
            raise SimulationFault(f"step {k}: {exc}") from exc
        if keep_states:
            states.append(s)
        var.append(velocity_variance(s))
    if not keep_states:
        states.append(s)
    return Episode(states, np.asarray(var))


def steps_for(seconds: float, dt: float) -> int:
    return int(round(seconds / dt))
