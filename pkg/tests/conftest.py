import numpy as np
import pytest

from flockgnn.expert import encode
from flockgnn.swarm import SimConfig, SwarmState, init_swarm


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_state(positions, velocities=None, orientations=None):
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    velocities = np.zeros((n, 2)) if velocities is None else np.asarray(velocities, dtype=float)
    orientations = np.zeros(n) if orientations is None else np.asarray(orientations, dtype=float)
    return SwarmState(positions, velocities, orientations)


def random_encoded(rng, n=15, comm_radius=1.0):
    s = init_swarm(n, SimConfig(comm_radius=comm_radius), rng)
    return s, encode(s, comm_radius)


def central_difference(loss, params, h=1e-5):
    """Numerical gradient of ``loss()`` w.r.t. every real coordinate of ``params``.

    Complex arrays get (d/dRe + 1j d/dIm), matching the library's convention.
    """
    out = {}
    for name, p in params.items():
        flat = p.reshape(-1)
        if np.iscomplexobj(p):
            g = np.zeros(flat.shape, dtype=complex)
            steps = (1.0, 1j)
        else:
            g = np.zeros(flat.shape)
            steps = (1.0,)
        for i in range(flat.size):
            for unit in steps:
                orig = flat[i]
                flat[i] = orig + h * unit
                lp = loss()
                flat[i] = orig - h * unit
                lm = loss()
                flat[i] = orig
                g[i] += unit * (lp - lm) / (2 * h)
        out[name] = g.reshape(p.shape)
    return out


def assert_grads_close(analytic, numeric, rtol=1e-4, atol=1e-7):
    for name, num in numeric.items():
        ana = analytic[name]
        for part in (np.real, np.imag) if np.iscomplexobj(num) else (np.real,):
            a, f = part(ana), part(num)
            bad = np.abs(a - f) > np.maximum(atol, rtol * np.abs(f))
            assert not bad.any(), f"{name}: analytic {a[bad][:3]} vs fd {f[bad][:3]}"


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
