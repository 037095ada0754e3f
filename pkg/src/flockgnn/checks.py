"""Property suites run by ``flockgnn selftest``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from .baseline import BaselineGNN
from .cvnet import InvariantGNN, activate
from .expert import encode
from .swarm import SimConfig, init_swarm, perturb_graph
from .training import loss_and_grads


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def random_graph(rng, n=15, comm_radius=1.0):
    s = init_swarm(n, SimConfig(comm_radius=comm_radius), rng)
    return s, encode(s, comm_radius)


def random_invariant_net(rng, hidden=(8, 8)):
    net = InvariantGNN.init(list(hidden), rng)
    for b, th in zip(net.mag_bias, net.rot_bias):
        b[:] = rng.normal(0.0, 0.5, b.shape)
        th[:] = rng.uniform(-np.pi, np.pi, th.shape)
    return net


def equivariance_deviation(net, graph, deltas) -> float:
    """Largest per-node relative deviation of f(delta . G) from delta . f(G)."""
    out = net(graph)
    out_p = net(perturb_graph(graph, deltas))
    expected = np.exp(-1j * deltas) * out
    return float(np.max(np.abs(out_p - expected) / np.maximum(np.abs(out), 1e-300)))


def check_equivariance(trials=100, seed=0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        net = random_invariant_net(rng)
        _, g = random_graph(rng)
        worst = max(worst, equivariance_deviation(net, g, rng.uniform(-np.pi, np.pi, g.n)))
    return CheckResult("network frame equivariance", worst <= 1e-8, f"max rel dev {worst:.2e}")


def check_matmul(trials=1000, seed=1) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        m, k = rng.integers(1, 9, 2)
        W = rng.normal(size=(m, k)) + 1j * rng.normal(size=(m, k))
        x = rng.normal(size=k) + 1j * rng.normal(size=k)
        r = np.exp(1j * rng.uniform(-np.pi, np.pi))
        lhs, rhs = r * (W @ x), W @ (r * x)
        worst = max(worst, np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs))
    return CheckResult("complex matmul equivariance", worst <= 1e-9, f"max rel err {worst:.2e}")


def check_activation(trials=1000, seed=2) -> CheckResult:
    rng = np.random.default_rng(seed)
    c = rng.normal(size=trials) + 1j * rng.normal(size=trials)
    b = rng.normal(size=trials)
    th = rng.uniform(-np.pi, np.pi, trials)
    phi = np.exp(1j * rng.uniform(-np.pi, np.pi, trials))
    zero_ok = np.all(activate(np.zeros(3, complex), np.ones(3), np.ones(3)) == 0)
    eq = np.max(np.abs(activate(phi * c, b, th) - phi * activate(c, b, th)))
    mag = np.max(np.abs(np.abs(activate(c, 0.0, 0.0)) - np.tanh(np.abs(c))))
    ok = zero_ok and eq <= 1e-12 and mag <= 1e-12
    return CheckResult("activation contract", ok,
                       f"zero={zero_ok} phase err {eq:.1e} magnitude err {mag:.1e}")


def fd_worst(model, graph, target, h=1e-5, rtol=1e-4, atol=1e-7) -> float:
    """Largest violation ratio of the finite-difference gradient test (<= 1 passes)."""
    _, grads = loss_and_grads(model, graph, target)
    worst = 0.0
    for name, p in model.params().items():
        pr = p.view(np.float64) if np.iscomplexobj(p) else p
        g = grads[name]
        gr = g.view(np.float64) if np.iscomplexobj(g) else g
        for i in range(pr.size):
            orig = pr.flat[i]
            pr.flat[i] = orig + h
            lp = loss_and_grads(model, graph, target)[0]
            pr.flat[i] = orig - h
            lm = loss_and_grads(model, graph, target)[0]
            pr.flat[i] = orig
            fd = (lp - lm) / (2 * h)
            err = abs(fd - gr.flat[i])
            worst = max(worst, err / max(atol, rtol * abs(fd)))
    return worst


def check_gradients(instances=3, seed=3) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        _, g = random_graph(rng, n=8)
        target = rng.normal(size=g.n) + 1j * rng.normal(size=g.n)
        worst = max(worst, fd_worst(random_invariant_net(rng), g, target))
        worst = max(worst, fd_worst(BaselineGNN.init([8, 8], rng), g, target))
    return CheckResult("finite-difference gradients", worst <= 1.0,
                       f"worst tolerance ratio {worst:.2e}")


SUITES: List[Callable[[], CheckResult]] = [
    check_matmul, check_activation, check_equivariance, check_gradients]


def run_all() -> List[CheckResult]:
    return [suite() for suite in SUITES]
