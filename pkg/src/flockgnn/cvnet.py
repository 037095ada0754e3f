"""Frame-equivariant complex-valued SAGEConv network.

Gradient convention: for a real loss L and a complex quantity z, the
cotangent is ``dL/dRe(z) + 1j * dL/dIm(z)``. For real parameters it is the
plain derivative. With this convention ``y = W @ z`` back-propagates as
``gW = gy conj(z)^T`` and ``gz = W^H gy``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
import scipy.sparse as sp

from .geometry import canonical_angle
from .swarm import EncodedGraph

ZERO_MAGNITUDE = 1e-12


def message(x_j: np.ndarray, msg_rot_ij: complex) -> np.ndarray:
    """Re-express neighbor j's latent vector in frame i."""
    return msg_rot_ij * np.asarray(x_j, dtype=np.complex128)


def aggregation_matrix(graph: EncodedGraph) -> sp.csr_matrix:
    """Sparse A with (A @ X)_i = mean_j msg_rot_ij * X_j; isolated rows are zero."""
    deg = graph.degree()
    w = graph.msg_rot / np.maximum(deg[graph.receivers], 1)
    return sp.csr_matrix((w, (graph.receivers, graph.senders)),
                         shape=(graph.n, graph.n), dtype=np.complex128)


def layer_forward(W: np.ndarray, x: np.ndarray, A) -> tuple[np.ndarray, np.ndarray]:
    """Returns (out, concat input) with out_i = W @ [x_i; mean_j rot_ij x_j]."""
    if W.shape[1] != 2 * x.shape[1]:
        raise ValueError(
            f"layer expects input width {W.shape[1] // 2}, got {x.shape[1]}")
    if not sp.issparse(A):
        A = aggregation_matrix(A)
    z = np.concatenate([x, A @ x], axis=1)
    return z @ W.T, z


def layer_backward(W, z, A, g_out):
    k = W.shape[1] // 2
    gW = g_out.T @ z.conj()
    gz = g_out @ W.conj()
    gx = gz[:, :k] + A.conj().T @ gz[:, k:]
    return gW, gx


def activate(c: np.ndarray, b: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Phase-amplitude tanh with magnitude bias b and rotation bias theta."""
    return _activate(np.asarray(c, dtype=np.complex128), b, theta)[0]


def _activate(c, b, theta):
    r = np.abs(c)
    live = r >= ZERO_MAGNITUDE
    unit = np.where(live, c / np.where(live, r, 1.0), 0.0)
    t = np.tanh(r + b)
    out = np.where(live, np.exp(1j * theta) * t * unit, 0.0)
    return out, (r, live, unit, t)


def _activate_backward(out, aux, theta, g):
    r, live, unit, t = aux
    g = np.where(live, g, 0.0)
    h = np.exp(-1j * theta) * g
    h_dot_u = (h.conj() * unit).real
    gtheta = (g.conj() * 1j * out).real.sum(axis=0)
    gb = (h_dot_u * (1.0 - t * t)).sum(axis=0)
    safe_r = np.where(live, r, 1.0)
    gc = np.where(live, (1.0 - t * t - t / safe_r) * h_dot_u * unit + (t / safe_r) * h, 0.0)
    return gc, gb, gtheta


@dataclass
class InvariantGNN:
    """Hidden (SAGE layer, activation) pairs followed by a width-1 SAGE head."""
    weights: List[np.ndarray]
    mag_bias: List[np.ndarray]
    rot_bias: List[np.ndarray]
    kind: str = field(default="invariant", init=False)

    def __post_init__(self):
        if len(self.weights) != len(self.mag_bias) + 1 or \
                len(self.mag_bias) != len(self.rot_bias):
            raise ValueError("need one more weight matrix than activations")
        widths = self.widths
        for l, W in enumerate(self.weights):
            if W.shape != (widths[l + 1], 2 * widths[l]):
                raise ValueError(f"layer {l} weight has shape {W.shape}")
        for l, (b, th) in enumerate(zip(self.mag_bias, self.rot_bias)):
            if b.shape != (widths[l + 1],) or th.shape != (widths[l + 1],):
                raise ValueError(f"activation {l} bias shape mismatch")
        if widths[-1] != 1:
            raise ValueError("output head must have width 1")

    @property
    def widths(self) -> List[int]:
        return [self.weights[0].shape[1] // 2] + [W.shape[0] for W in self.weights]

    @classmethod
    def init(cls, hidden: Sequence[int], rng: np.random.Generator,
             in_width: int = 3) -> "InvariantGNN":
        widths = [in_width, *hidden, 1]
        weights = []
        for fan_out, k in zip(widths[1:], widths[:-1]):
            fan_in = 2 * k
            std = np.sqrt(1.0 / (2.0 * fan_in))
            re = rng.normal(0.0, std, (fan_out, fan_in))
            im = rng.normal(0.0, std, (fan_out, fan_in))
            weights.append(re + 1j * im)
        return cls(weights, [np.zeros(w) for w in hidden], [np.zeros(w) for w in hidden])

    def params(self) -> Dict[str, np.ndarray]:
        p = {}
        for l, W in enumerate(self.weights):
            p[f"layers.{l}.W"] = W
        for l, (b, th) in enumerate(zip(self.mag_bias, self.rot_bias)):
            p[f"act.{l}.b"] = b
            p[f"act.{l}.theta"] = th
        return p

    @classmethod
    def from_params(cls, p: Dict[str, np.ndarray]) -> "InvariantGNN":
        n_layers = sum(1 for k in p if k.startswith("layers."))
        return cls([np.asarray(p[f"layers.{l}.W"], dtype=np.complex128) for l in range(n_layers)],
                   [np.asarray(p[f"act.{l}.b"], dtype=np.float64) for l in range(n_layers - 1)],
                   [np.asarray(p[f"act.{l}.theta"], dtype=np.float64) for l in range(n_layers - 1)])

    def canonicalize(self) -> None:
        for th in self.rot_bias:
            th[...] = canonical_angle(th)

    def forward(self, graph: EncodedGraph, A=None):
        """Per-node complex output and the cache needed by ``backward``."""
        if graph.features is None:
            raise ValueError("graph has no node features")
        x = np.asarray(graph.features, dtype=np.complex128)
        if A is None:
            A = aggregation_matrix(graph)
        cache = []
        n_act = len(self.mag_bias)
        for l, W in enumerate(self.weights):
            c, z = layer_forward(W, x, A)
            if l < n_act:
                x, aux = _activate(c, self.mag_bias[l], self.rot_bias[l])
                cache.append((z, x, aux))
            else:
                cache.append((z, None, None))
                x = c
        return x[:, 0], (A, cache)

    def __call__(self, graph: EncodedGraph) -> np.ndarray:
        return self.forward(graph)[0]

    act = __call__

    def backward(self, cache, upstream: np.ndarray) -> Dict[str, np.ndarray]:
        A, layers = cache
        g = np.asarray(upstream, dtype=np.complex128).reshape(-1, 1)
        grads: Dict[str, np.ndarray] = {}
        for l in reversed(range(len(self.weights))):
            z, out, aux = layers[l]
            if out is not None:
                g, gb, gth = _activate_backward(out, aux, self.rot_bias[l], g)
                grads[f"act.{l}.b"] = gb
                grads[f"act.{l}.theta"] = gth
            gW, g = layer_backward(self.weights[l], z, A, g)
            grads[f"layers.{l}.W"] = gW
        return grads


def forward(net: InvariantGNN, graph: EncodedGraph) -> np.ndarray:
    return net(graph)


def backward(net: InvariantGNN, graph: EncodedGraph, upstream: np.ndarray) -> Dict[str, np.ndarray]:
    _, cache = net.forward(graph)
    return net.backward(cache, upstream)
