import math

import numpy as np
import pytest

from conftest import make_state
from flockgnn.errors import SimulationFault
from flockgnn.expert import (encode, local_features, local_nominal_control, nominal_control,
                             relative_position)
from flockgnn.rollout import episode_rngs, expert_controller, run_episode
from flockgnn.swarm import SimConfig, build_graph, init_swarm, perturb_frames


def global_expert(s, neighbours=None):
    """Brute-force flocking law written directly in the global frame."""
    n = s.n
    out = np.zeros(n, complex)
    P = s.positions[:, 0] + 1j * s.positions[:, 1]
    V = s.velocities[:, 0] + 1j * s.velocities[:, 1]
    for i in range(n):
        for j in range(n):
            if i == j or (neighbours is not None and (i, j) not in neighbours):
                continue
            d = P[j] - P[i]
            r = abs(d)
            out[i] += -(V[i] - V[j]) + 2 * d / r**2 - 2 * d / r**4
    return out


def test_relative_position():
    s = make_state([(0, 0), (1, 0)])
    assert relative_position(s, 0, 1) == 1 + 0j
    s = make_state([(0, 0), (1, 0)], orientations=[math.pi / 2, 0])
    assert abs(relative_position(s, 0, 1) - (-1j)) < 1e-15


def test_relative_position_norm_frame_free():
    for a in np.linspace(-3, 3, 7):
        s = make_state([(0.2, -1), (1.5, 0.7)], orientations=[a, 0])
        assert abs(relative_position(s, 0, 1)) == pytest.approx(math.hypot(1.3, 1.7), abs=1e-14)


def test_two_agent_equilibrium():
    s = make_state([(0, 0), (1, 0)], velocities=[(0.3, -0.2)] * 2, orientations=[0.7, -2.1])
    assert np.max(np.abs(nominal_control(s))) <= 1e-12


def test_close_pair_repels():
    s = make_state([(0, 0), (0.5, 0)], velocities=[(1, 1)] * 2)
    u = nominal_control(s)
    assert u[0] == pytest.approx(-12 + 0j, abs=1e-12)
    assert u[1] == pytest.approx(12 + 0j, abs=1e-12)


def test_far_pair_attracts():
    s = make_state([(0, 0), (2, 0)])
    assert nominal_control(s)[0] == pytest.approx(0.75 + 0j, abs=1e-12)


def test_velocity_disagreement_is_damped():
    s = make_state([(0, 0), (1, 0)], velocities=[(1, 0), (0, 0)])
    # agent 0 is faster -> decelerates; agent 1 accelerates
    assert nominal_control(s)[0] == pytest.approx(-1 + 0j, abs=1e-12)
    assert nominal_control(s)[1] == pytest.approx(1 + 0j, abs=1e-12)


def test_nominal_matches_global_oracle():
    rng = np.random.default_rng(4)
    s = init_swarm(12, SimConfig(), rng)
    body = nominal_control(s)
    assert np.allclose(np.exp(1j * s.orientations) * body, global_expert(s), atol=1e-10)


def test_expert_global_frame_invariance():
    rng = np.random.default_rng(5)
    for _ in range(20):
        s = init_swarm(15, SimConfig(), rng)
        deltas = rng.uniform(-math.pi, math.pi, s.n)
        s2, _ = perturb_frames(s, build_graph(s, None), deltas)
        g1 = np.exp(1j * s.orientations) * nominal_control(s)
        g2 = np.exp(1j * s2.orientations) * nominal_control(s2)
        assert np.max(np.abs(g1 - g2)) <= 1e-9 * max(1, np.abs(g1).max())


def test_local_features_single_neighbour():
    s = make_state([(0, 0), (0.5, 0)], velocities=[(1, 0)] * 2)
    f = local_features(s, build_graph(s, 1.0))
    assert np.allclose(f[0], [0, 2, 8], atol=1e-14)


def test_local_features_isolated():
    s = make_state([(0, 0), (3, 0)], velocities=[(1, 0), (0, 1)])
    assert np.array_equal(local_features(s, build_graph(s, 1.0)), np.zeros((2, 3)))


def test_local_features_follow_frame_perturbation():
    rng = np.random.default_rng(6)
    s = init_swarm(15, SimConfig(), rng)
    g = build_graph(s, 1.0)
    f = local_features(s, g)
    deltas = rng.uniform(-math.pi, math.pi, s.n)
    s2, g2 = perturb_frames(s, g, deltas)
    f2 = local_features(s2, g2)
    assert np.allclose(f2, np.exp(-1j * deltas)[:, None] * f, atol=1e-9)


def test_local_nominal_fully_connected_matches_nominal():
    rng = np.random.default_rng(7)
    s = init_swarm(8, SimConfig(area_radius=0.5, min_separation=0.05), rng)
    g = build_graph(s, 10.0)
    assert np.allclose(local_nominal_control(s, g), nominal_control(s), atol=1e-12)


def test_local_nominal_isolated_node_is_zero():
    s = make_state([(0, 0), (0.5, 0), (5, 5)], velocities=[(1, 0), (0, 0), (3, 3)])
    assert local_nominal_control(s, build_graph(s, 1.0))[2] == 0


def test_local_nominal_sparse_differs_and_matches_oracle():
    rng = np.random.default_rng(8)
    s = init_swarm(20, SimConfig(), rng)
    g = build_graph(s, 1.0)
    nb = set(g.edge_dict())
    loc = local_nominal_control(s, g)
    assert np.allclose(np.exp(1j * s.orientations) * loc, global_expert(s, nb), atol=1e-10)
    assert not np.allclose(loc, nominal_control(s))


def test_nominal_coincident_fault():
    s = make_state([(0, 0), (0, 0), (1, 0)])
    with pytest.raises(SimulationFault):
        nominal_control(s)


def test_encode_attaches_features():
    rng = np.random.default_rng(9)
    s = init_swarm(6, SimConfig(), rng)
    g = encode(s, 1.0)
    assert g.features.shape == (6, 3)


def test_expert_convergence_regression():
    # 20-agent fully connected flock, 2 s: regression bound frozen from the
    # oracle run of this seed (ratio observed ~100x); see acceptance for the gate.
    dyn, frames, _ = episode_rngs(0, 0)
    ep = run_episode(expert_controller, 20, SimConfig(), 200, dyn, frames, keep_states=False)
    assert ep.variance[-1] <= 0.02 * ep.variance[0]
