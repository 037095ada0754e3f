"""Nominal flocking controller and the local input features for the GNNs.

Everything here is computed from body-frame quantities: each agent sees its
own velocity and neighbor offsets in its own frame, and neighbor velocities
arrive through the edge rotation ``msg_rot``.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import SimulationFault
from .swarm import EncodedGraph, SwarmState, build_graph

NUM_FEATURES = 3


def relative_position(s: SwarmState, i: int, j: int) -> complex:
    """T_ij: position of j relative to i, expressed in frame B_i."""
    if i == j:
        raise ValueError("relative_position needs i != j")
    d = s.positions[j] - s.positions[i]
    return complex(np.exp(-1j * s.orientations[i]) * complex(d[0], d[1]))


def local_velocities(s: SwarmState) -> np.ndarray:
    return np.exp(-1j * s.orientations) * (s.velocities[:, 0] + 1j * s.velocities[:, 1])


def _edge_offsets(s: SwarmState, g: EncodedGraph) -> np.ndarray:
    d = s.positions[g.senders] - s.positions[g.receivers]
    T = np.exp(-1j * s.orientations[g.receivers]) * (d[:, 0] + 1j * d[:, 1])
    if np.any(T == 0):
        k = int(np.argmax(T == 0))
        raise SimulationFault(
            f"agents {g.receivers[k]} and {g.senders[k]} are coincident")
    return T


def local_features(s: SwarmState, g: EncodedGraph) -> np.ndarray:
    """(n, 3) complex features per node, each in the node's body frame:
    velocity disagreement, sum T/|T|^2, sum T/|T|^4 over graph neighbors."""
    v = local_velocities(s)
    T = _edge_offsets(s, g)
    r2 = (T * T.conj()).real
    feats = np.zeros((g.n, NUM_FEATURES), dtype=np.complex128)
    np.add.at(feats[:, 0], g.receivers, v[g.receivers] - g.msg_rot * v[g.senders])
    np.add.at(feats[:, 1], g.receivers, T / r2)
    np.add.at(feats[:, 2], g.receivers, T / (r2 * r2))
    return feats


def control_from_features(feats: np.ndarray) -> np.ndarray:
    """Flocking acceleration from summed features.

    Velocity disagreement is damped; the pair potential pushes apart below
    unit spacing and pulls together above it.
    """
    feats = np.asarray(feats)
    return -feats[:, 0] + 2.0 * feats[:, 1] - 2.0 * feats[:, 2]


def local_nominal_control(s: SwarmState, g: EncodedGraph) -> np.ndarray:
    return control_from_features(local_features(s, g))


def nominal_control(s: SwarmState, g: Optional[EncodedGraph] = None) -> np.ndarray:
    """Expert action on the fully connected graph (ignores comm radius)."""
    if g is None:
        g = build_graph(s, None)
    elif g.num_edges != s.n * (s.n - 1):
        raise ValueError("nominal_control needs the fully connected graph")
    return local_nominal_control(s, g)


def encode(s: SwarmState, comm_radius: float) -> EncodedGraph:
    """Communication graph at radius C with local features attached."""
    g = build_graph(s, comm_radius)
    return g.with_features(local_features(s, g))
