"""Exit criteria, one test each; every test prints a PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, central_difference, make_state, random_encoded
from flockgnn import cli
from flockgnn.baseline import BaselineGNN
from flockgnn.cvnet import InvariantGNN, activate
from flockgnn.expert import local_features, nominal_control
from flockgnn.harness.config import ExperimentConfig
from flockgnn.harness.experiments import evaluate, extended_run, reduced_radius_run
from flockgnn.rollout import EVAL, episode_rngs, model_controller, run_episode
from flockgnn.swarm import SimConfig, build_graph, perturb_frames
from flockgnn.training import DaggerConfig, loss_and_grads, train


def report(number, name, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number} {name}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


@pytest.fixture(scope="module")
def trained():
    """Default DAGGER config, 2 hidden layers of width 8."""
    t0 = time.perf_counter()
    model, history = train(DaggerConfig(), "invariant", [8, 8])
    return model, history, time.perf_counter() - t0


@pytest.fixture(scope="module")
def eval_config():
    return ExperimentConfig(model="expert", n_agents=30, episode_seconds=2.0,
                            eval_episodes=20, seed=0)


def random_net(rng):
    layers = int(rng.integers(2, 5))
    width = int(rng.choice([8, 16, 32]))
    net = InvariantGNN.init([width] * layers, rng)
    for b, th in zip(net.mag_bias, net.rot_bias):
        b[:] = rng.normal(0, 0.5, b.shape)
        th[:] = rng.uniform(-math.pi, math.pi, th.shape)
    return net


def test_c1_network_equivariance():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        net = random_net(rng)
        s, g = random_encoded(rng, n=15)
        d = rng.uniform(-math.pi, math.pi, 15)
        s2, _ = perturb_frames(s, g, d)
        g2 = build_graph(s2, 1.0)
        g2 = g2.with_features(local_features(s2, g2))
        out, out_p = net(g), net(g2)
        worst = max(worst, np.max(np.abs(out_p - np.exp(-1j * d) * out) / np.abs(out)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 60
    report(1, "frame equivariance (100 triples, n=15)", ok,
           f"max rel dev {worst:.2e} <= 1e-8, {elapsed:.1f}s < 60s")
    assert ok


def test_c2_complex_matmul_equivariance():
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(1000):
        m, k = rng.integers(1, 33, 2)
        W = rng.normal(size=(m, k)) + 1j * rng.normal(size=(m, k))
        x = rng.normal(size=k) + 1j * rng.normal(size=k)
        r = np.exp(1j * rng.uniform(-math.pi, math.pi))
        lhs, rhs = r * (W @ x), W @ (r * x)
        worst = max(worst, np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs))
    report(2, "complex matmul equivariance (1000 triples)", worst <= 1e-9,
           f"max rel err {worst:.2e} <= 1e-9")
    assert worst <= 1e-9


def test_c3_activation_contract():
    rng = np.random.default_rng(103)
    c = (rng.normal(size=10_000) + 1j * rng.normal(size=10_000)) * rng.uniform(0, 5, 10_000)
    b = rng.normal(size=10_000)
    th = rng.uniform(-math.pi, math.pi, 10_000)
    phase = np.exp(1j * rng.uniform(-math.pi, math.pi, 10_000))
    zero = activate(np.zeros(4, complex), np.array([0.0, 1.0, -1.0, 2.0]), np.ones(4))
    zero_exact = bool(np.all(zero == 0))
    eq = float(np.max(np.abs(activate(phase * c, b, th) - phase * activate(c, b, th))))
    mag = float(np.max(np.abs(np.abs(activate(c, 0.0, 0.0)) - np.tanh(np.abs(c)))))
    ok = zero_exact and eq <= 1e-12 and mag <= 1e-12
    report(3, "activation contract", ok,
           f"sigma(0)=0 {zero_exact}, phase err {eq:.1e}, |sigma|-tanh err {mag:.1e} (<=1e-12)")
    assert ok


def test_c4_gradient_correctness():
    rng = np.random.default_rng(104)
    t0 = time.perf_counter()
    worst, coords = 0.0, 0
    for _ in range(10):
        _, g = random_encoded(rng, n=10)
        target = rng.normal(size=g.n) + 1j * rng.normal(size=g.n)
        inv = InvariantGNN.init([8, 8], rng)
        for b, th in zip(inv.mag_bias, inv.rot_bias):
            b[:] = rng.normal(0, 0.5, b.shape)
            th[:] = rng.uniform(-math.pi, math.pi, th.shape)
        for net in (inv, BaselineGNN.init([8, 8], rng)):
            _, analytic = loss_and_grads(net, g, target)
            numeric = central_difference(lambda: loss_and_grads(net, g, target)[0],
                                         net.params(), h=1e-5)
            for name, num in numeric.items():
                parts = (np.real, np.imag) if np.iscomplexobj(num) else (np.real,)
                for part in parts:
                    a, f = part(analytic[name]), part(num)
                    ratio = np.abs(a - f) / np.maximum(1e-7, 1e-4 * np.abs(f))
                    worst = max(worst, float(ratio.max()))
                    coords += f.size
    elapsed = time.perf_counter() - t0
    ok = worst <= 1.0 and elapsed < 300
    report(4, "finite-difference gradients (both nets, 10 instances)", ok,
           f"{coords} coords, worst err/tol {worst:.2e} <= 1, {elapsed:.1f}s < 300s")
    assert ok


def test_c5_trajectory_invariance(trained):
    model = trained[0]
    cfg = SimConfig()
    dyn_a, frames_a, _ = episode_rngs(5, 0, EVAL, frame_salt=1)
    dyn_b, frames_b, _ = episode_rngs(5, 0, EVAL, frame_salt=2)
    a = run_episode(model_controller(model), 30, cfg, 200, dyn_a, frames_a)
    b = run_episode(model_controller(model), 30, cfg, 200, dyn_b, frames_b)
    assert np.array_equal(a.states[0].positions, b.states[0].positions)
    assert not np.allclose(a.states[0].orientations, b.states[0].orientations)
    dev = max(max(np.max(np.abs(sa.positions - sb.positions)),
                  np.max(np.abs(sa.velocities - sb.velocities)))
              for sa, sb in zip(a.states, b.states))
    report(5, "global trajectory invariance (200 steps)", dev <= 1e-5,
           f"max coordinate deviation {dev:.2e} <= 1e-5")
    assert dev <= 1e-5


def test_c6_expert_behaviour():
    cfg = ExperimentConfig(model="expert", n_agents=20, episode_seconds=2.0,
                           eval_episodes=20, seed=0, dt=0.01)
    s = evaluate(cfg, write=False)
    reduction = s.mean[0] / s.mean[-1]
    eq = make_state([(0, 0), (1, 0)], velocities=[(0.4, -0.1)] * 2, orientations=[1.0, -2.5])
    residual = float(np.max(np.abs(nominal_control(eq))))
    ok = reduction >= 100 and residual <= 1e-12
    report(6, "expert variance reduction (n=20, 2 s, 20 episodes)", ok,
           f"reduction {reduction:.1f}x >= 100x, two-agent residual {residual:.1e} <= 1e-12")
    assert ok


def test_c7_desk_scale_imitation(trained, eval_config):
    model, history, seconds = trained
    expert = evaluate(eval_config, write=False)
    learner = evaluate(eval_config.with_overrides(model="invariant"), model, write=False)
    ratio = learner.final_mean / expert.final_mean
    report(7, "desk-scale imitation (2x8, K=10, n=30, 20 episodes)", ratio <= 10,
           f"learner {learner.final_mean:.4g} / expert {expert.final_mean:.4g} = "
           f"{ratio:.2f} <= 10 (training {seconds:.0f}s)")
    assert ratio <= 10


def test_c8_generalization(trained, eval_config):
    model = trained[0]
    inv = eval_config.with_overrides(model="invariant")
    ex5 = extended_run(eval_config, seconds=5.0, write=False)
    le5 = extended_run(inv, model, seconds=5.0, write=False)
    worst5 = float(np.max(le5.mean / ex5.mean))
    expert = evaluate(eval_config, write=False)
    low = reduced_radius_run(inv, model, radius=0.8, write=False)
    ratio_c = low.final_mean / expert.final_mean

    base, _ = train(DaggerConfig(), "baseline", [8, 8])
    base_cfg = eval_config.with_overrides(model="baseline")
    b2 = evaluate(base_cfg, base, write=False).final_mean / expert.final_mean
    b5 = float(np.max(extended_run(base_cfg, base, seconds=5.0, write=False).mean / ex5.mean))
    bc = reduced_radius_run(base_cfg, base, radius=0.8, write=False).final_mean / expert.final_mean

    ok = worst5 <= 10 and ratio_c <= 100
    report(8, "generalization probes", ok,
           f"5 s max ratio {worst5:.2f} <= 10, C=0.8 ratio {ratio_c:.2f} <= 100; "
           f"baseline (not gated): 2 s {b2:.2f}, 5 s max {b5:.2f}, C=0.8 {bc:.2f}")
    assert ok


def test_c9_determinism(tmp_path):
    def run(tag):
        out = tmp_path / tag
        common = ["--seed", "21"]
        cfg = tmp_path / "cfg.yaml"
        assert cli.main(["train", "--config", str(cfg), "--out", str(out / "train")] + common) == 0
        ck = str(out / "train" / "model.json")
        for cmd in ("evaluate", "extended", "reduced-radius"):
            assert cli.main([cmd, "--config", str(cfg), "--checkpoint", ck,
                             "--out", str(out / cmd)] + common) == 0
        assert cli.main(["sweep", "--config", str(cfg), "--out", str(out / "sweep")] + common) == 0
        return {p.relative_to(out): p.read_bytes()
                for p in sorted(out.rglob("*")) if p.suffix in (".csv", ".jsonl")}

    (tmp_path / "cfg.yaml").write_text(
        "model: invariant\nn_agents: 6\nepisode_seconds: 0.1\neval_episodes: 2\n"
        "sweep_kinds: [invariant]\nsweep_layers: [2]\nsweep_widths: [8, 16, 32]\n"
        "train: {iterations: 2, episodes_per_iteration: 1, episode_seconds: 0.1, "
        "epochs: 2, batch_size: 4, n_agents: 6}\n")
    first, second = run("a"), run("b")
    same = first.keys() == second.keys() and all(first[k] == second[k] for k in first)
    report(9, "determinism of CSV outputs", same,
           f"{len(first)} CSV/JSONL files bit-identical across reruns: {same}")
    assert same
