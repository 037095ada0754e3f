"""Planar swarm of holonomic double integrators with randomized body frames.

The global frame lives only inside ``SwarmState``. Controllers see an
``EncodedGraph``: per-node features in each agent's body frame plus, per
directed edge (i, j), the unit complex number ``msg_rot`` that re-expresses
frame-j coordinates in frame i.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

from .errors import ConfigurationError, SimulationFault
from .geometry import Rotation, canonical_angle

TRAJECTORY_HEADER = ["step", "agent", "px", "py", "vx", "vy", "alpha"]


@dataclass(frozen=True)
class SimConfig:
    comm_radius: float = 1.0
    dt: float = 0.01
    frame_jitter_std: float = 0.1
    # None -> 0.6 * sqrt(n), keeping density independent of n
    area_radius: Optional[float] = None
    min_separation: float = 0.2
    max_speed: float = 1.0
    seed: int = 0
    placement_retries: int = 50

    def __post_init__(self):
        if not self.comm_radius > 0:
            raise ConfigurationError(f"comm_radius must be > 0, got {self.comm_radius}")
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be > 0, got {self.dt}")
        if not self.frame_jitter_std >= 0:
            raise ConfigurationError(
                f"frame_jitter_std must be >= 0, got {self.frame_jitter_std}")
        if self.min_separation < 0 or self.max_speed < 0:
            raise ConfigurationError("min_separation and max_speed must be >= 0")
        if self.area_radius is not None and not self.area_radius > 0:
            raise ConfigurationError(f"area_radius must be > 0, got {self.area_radius}")

    def disc_radius(self, n: int) -> float:
        return self.area_radius if self.area_radius is not None else 0.6 * np.sqrt(n)


@dataclass(frozen=True)
class SwarmState:
    positions: np.ndarray      # (n, 2) global frame
    velocities: np.ndarray     # (n, 2) global frame
    orientations: np.ndarray   # (n,) body-frame angle w.r.t. global, canonical

    def __post_init__(self):
        n = len(self.positions)
        if n < 2:
            raise ConfigurationError(f"a swarm needs n >= 2 agents, got {n}")
        if self.positions.shape != (n, 2) or self.velocities.shape != (n, 2) \
                or self.orientations.shape != (n,):
            raise ValueError("inconsistent SwarmState array shapes")
        for name in ("positions", "velocities", "orientations"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise SimulationFault(f"non-finite {name} in swarm state")

    @property
    def n(self) -> int:
        return len(self.positions)

    def rotation(self, i: int) -> Rotation:
        return Rotation(float(self.orientations[i]))

    def copy(self) -> "SwarmState":
        return SwarmState(self.positions.copy(), self.velocities.copy(),
                          self.orientations.copy())


@dataclass(frozen=True)
class EncodedGraph:
    """Directed graph seen by the controllers.

    Edge k goes from ``senders[k]`` (j) to ``receivers[k]`` (i).
    """
    n: int
    receivers: np.ndarray      # (E,) int, i
    senders: np.ndarray        # (E,) int, j
    msg_rot: np.ndarray        # (E,) complex, frame j -> frame i
    features: Optional[np.ndarray] = None   # (n, k) complex, body frames

    @property
    def num_edges(self) -> int:
        return len(self.receivers)

    def with_features(self, features: np.ndarray) -> "EncodedGraph":
        features = np.asarray(features, dtype=np.complex128)
        if features.ndim != 2 or features.shape[0] != self.n:
            raise ValueError(f"features must be (n={self.n}, k), got {features.shape}")
        return replace(self, features=features)

    def degree(self) -> np.ndarray:
        return np.bincount(self.receivers, minlength=self.n)

    def edge_angles(self) -> np.ndarray:
        """Canonical angle theta_ij of every edge rotation."""
        return canonical_angle(np.angle(self.msg_rot))

    def edge_dict(self) -> dict:
        return {(int(i), int(j)): complex(r)
                for i, j, r in zip(self.receivers, self.senders, self.msg_rot)}


def batch_graphs(graphs: Sequence[EncodedGraph]) -> EncodedGraph:
    """Disjoint union; node blocks keep their order."""
    offsets = np.cumsum([0] + [g.n for g in graphs])
    feats = None
    if all(g.features is not None for g in graphs):
        feats = np.concatenate([g.features for g in graphs], axis=0)
    return EncodedGraph(
        n=int(offsets[-1]),
        receivers=np.concatenate([g.receivers + o for g, o in zip(graphs, offsets)]),
        senders=np.concatenate([g.senders + o for g, o in zip(graphs, offsets)]),
        msg_rot=np.concatenate([g.msg_rot for g in graphs]),
        features=feats,
    )


def _disc_samples(rng: np.random.Generator, radius: float, size: int) -> np.ndarray:
    r = radius * np.sqrt(rng.random(size))
    a = rng.uniform(-np.pi, np.pi, size)
    return np.stack([r * np.cos(a), r * np.sin(a)], axis=-1)


def _adjacency(positions: np.ndarray, radius: float) -> np.ndarray:
    d = cdist(positions, positions)
    return (d > 0) & (d < radius)


def is_connected(positions: np.ndarray, radius: float) -> bool:
    ncomp, _ = connected_components(_adjacency(positions, radius), directed=False)
    return ncomp == 1


def _place(n: int, cfg: SimConfig, rng: np.random.Generator) -> Optional[np.ndarray]:
    radius = cfg.disc_radius(n)
    pts = np.empty((n, 2))
    budget = 10_000
    for k in range(n):
        for _ in range(budget):
            p = _disc_samples(rng, radius, 1)[0]
            if k == 0:
                break
            d = np.hypot(*(pts[:k] - p).T)
            # new agents must join the existing component
            if d.min() >= cfg.min_separation and d.min() < cfg.comm_radius:
                break
        else:
            return None
        pts[k] = p
    return pts


def init_swarm(n: int, cfg: SimConfig, rng: np.random.Generator,
               frame_rng: Optional[np.random.Generator] = None) -> SwarmState:
    """Random connected swarm.

    Positions and velocities come from ``rng``; body-frame orientations from
    ``frame_rng`` (defaults to ``rng``) so frames can be varied independently
    of the physical initial condition.
    """
    if n < 2:
        raise ConfigurationError(f"n must be >= 2, got {n}")
    frame_rng = rng if frame_rng is None else frame_rng
    for _ in range(cfg.placement_retries):
        pos = _place(n, cfg, rng)
        if pos is not None and is_connected(pos, cfg.comm_radius):
            break
    else:
        raise ConfigurationError(
            f"could not place {n} connected agents: comm_radius={cfg.comm_radius}, "
            f"area_radius={cfg.disc_radius(n):.3g}, min_separation={cfg.min_separation}")
    vel = _disc_samples(rng, cfg.max_speed, n)
    alpha = canonical_angle(frame_rng.uniform(-np.pi, np.pi, n))
    return SwarmState(pos, vel, np.asarray(alpha, dtype=np.float64))


def _check_coincident(d: np.ndarray) -> None:
    n = len(d)
    coincident = (d == 0) & ~np.eye(n, dtype=bool)
    if coincident.any():
        i, j = np.argwhere(coincident)[0]
        raise SimulationFault(f"agents {i} and {j} are coincident")


def build_graph(s: SwarmState, comm_radius: Optional[float] = None) -> EncodedGraph:
    """Communication graph at radius C (fully connected when C is None)."""
    d = cdist(s.positions, s.positions)
    _check_coincident(d)
    mask = d > 0
    if comm_radius is not None:
        mask &= d < comm_radius
    recv, send = np.nonzero(mask)
    alpha = s.orientations
    msg_rot = np.exp(1j * (alpha[send] - alpha[recv]))
    return EncodedGraph(n=s.n, receivers=recv, senders=send, msg_rot=msg_rot)


def _as_angles(deltas, n: int) -> np.ndarray:
    deltas = [d.angle if isinstance(d, Rotation) else d for d in deltas]
    deltas = np.asarray(deltas, dtype=np.float64)
    if deltas.shape != (n,):
        raise ValueError(f"need one delta per agent ({n}), got shape {deltas.shape}")
    return deltas


def perturb_graph(g: EncodedGraph, deltas) -> EncodedGraph:
    """Re-express ``g`` after rotating body frame i by deltas[i]."""
    d = _as_angles(deltas, g.n)
    msg_rot = np.exp(1j * (d[g.senders] - d[g.receivers])) * g.msg_rot
    feats = None
    if g.features is not None:
        feats = g.features * np.exp(-1j * d)[:, None]
    return replace(g, msg_rot=msg_rot, features=feats)


def perturb_frames(s: SwarmState, g: EncodedGraph, deltas):
    d = _as_angles(deltas, s.n)
    s2 = SwarmState(s.positions.copy(), s.velocities.copy(),
                    canonical_angle(s.orientations + d))
    return s2, perturb_graph(g, d)


def step_dynamics(s: SwarmState, u: np.ndarray, dt: float,
                  jitter_std: float = 0.0,
                  rng: Optional[np.random.Generator] = None) -> SwarmState:
    """Semi-implicit Euler step with body-frame accelerations ``u``."""
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (s.n,):
        raise ValueError(f"need one acceleration per agent ({s.n}), got {u.shape}")
    bad = ~np.isfinite(u)
    if bad.any():
        raise SimulationFault(f"non-finite acceleration for agent {int(np.argmax(bad))}")
    a_glob = np.exp(1j * s.orientations) * u
    vel = s.velocities + np.stack([a_glob.real, a_glob.imag], axis=-1) * dt
    pos = s.positions + vel * dt
    alpha = s.orientations
    if jitter_std > 0:
        if rng is None:
            raise ValueError("frame jitter needs an rng")
        alpha = alpha + rng.normal(0.0, jitter_std, s.n)
    return SwarmState(pos, vel, np.asarray(canonical_angle(alpha), dtype=np.float64))


def velocity_variance(s_or_vel) -> float:
    vel = s_or_vel.velocities if isinstance(s_or_vel, SwarmState) else np.asarray(s_or_vel)
    dev = vel - vel.mean(axis=0)
    return float(np.mean(np.sum(dev * dev, axis=-1)))


def write_trajectory(path, states: Iterable[SwarmState]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        for step, s in enumerate(states):
            for a in range(s.n):
                w.writerow([step, a, repr(float(s.positions[a, 0])),
                            repr(float(s.positions[a, 1])),
                            repr(float(s.velocities[a, 0])),
                            repr(float(s.velocities[a, 1])),
                            repr(float(s.orientations[a]))])
