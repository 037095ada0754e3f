"""Real-valued SAGEConv baseline whose messages carry the inter-frame angle.

Node inputs are the complex features split into (x, y) pairs. The network is
deliberately not frame-equivariant.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
import scipy.sparse as sp

from .swarm import EncodedGraph


def baseline_message(x_j: np.ndarray, theta_ij: float, angle_encoding: str = "raw") -> np.ndarray:
    x_j = np.asarray(x_j, dtype=np.float64)
    if angle_encoding == "raw":
        extra = [theta_ij]
    elif angle_encoding == "cossin":
        extra = [np.cos(theta_ij), np.sin(theta_ij)]
    else:
        raise ValueError(f"unknown angle encoding {angle_encoding!r}")
    return np.concatenate([x_j, extra])


def real_features(complex_feats: np.ndarray) -> np.ndarray:
    """(n, k) complex -> (n, 2k) real, interleaving (re, im) per feature."""
    c = np.ascontiguousarray(complex_feats, dtype=np.complex128)
    return c.view(np.float64).reshape(c.shape[0], -1).copy()


def _angle_channels(angles: np.ndarray, encoding: str) -> np.ndarray:
    if encoding == "raw":
        return angles[:, None]
    if encoding == "cossin":
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    raise ValueError(f"unknown angle encoding {encoding!r}")


@dataclass
class BaselineGNN:
    weights: List[np.ndarray]
    angle_encoding: str = "raw"
    kind: str = field(default="baseline", init=False)

    def __post_init__(self):
        widths = self.widths
        for l, W in enumerate(self.weights):
            if W.shape != (widths[l + 1], 2 * widths[l] + self.angle_width):
                raise ValueError(f"layer {l} weight has shape {W.shape}")
        if widths[-1] != 2:
            raise ValueError("output head must have width 2")

    @property
    def angle_width(self) -> int:
        return 1 if self.angle_encoding == "raw" else 2

    @property
    def widths(self) -> List[int]:
        first = (self.weights[0].shape[1] - self.angle_width) // 2
        return [first] + [W.shape[0] for W in self.weights]

    @classmethod
    def init(cls, hidden: Sequence[int], rng: np.random.Generator, in_width: int = 6,
             angle_encoding: str = "raw") -> "BaselineGNN":
        extra = 1 if angle_encoding == "raw" else 2
        widths = [in_width, *hidden, 2]
        weights = []
        for fan_out, k in zip(widths[1:], widths[:-1]):
            fan_in = 2 * k + extra
            weights.append(rng.normal(0.0, np.sqrt(1.0 / fan_in), (fan_out, fan_in)))
        return cls(weights, angle_encoding)

    def params(self) -> Dict[str, np.ndarray]:
        return {f"layers.{l}.W": W for l, W in enumerate(self.weights)}

    @classmethod
    def from_params(cls, p: Dict[str, np.ndarray], angle_encoding: str = "raw") -> "BaselineGNN":
        n = sum(1 for k in p if k.startswith("layers."))
        return cls([np.asarray(p[f"layers.{l}.W"], dtype=np.float64) for l in range(n)],
                   angle_encoding)

    def canonicalize(self) -> None:
        pass

    def _mean_operator(self, graph: EncodedGraph):
        deg = graph.degree()
        w = 1.0 / np.maximum(deg[graph.receivers], 1)
        M = sp.csr_matrix((w, (graph.receivers, graph.senders)), shape=(graph.n, graph.n))
        ang = _angle_channels(graph.edge_angles(), self.angle_encoding)
        mean_ang = np.zeros((graph.n, ang.shape[1]))
        np.add.at(mean_ang, graph.receivers, ang * w[:, None])
        return M, mean_ang

    def forward(self, graph: EncodedGraph, ops=None):
        """Per-node body-frame acceleration (n, 2) and the backward cache."""
        if graph.features is None:
            raise ValueError("graph has no node features")
        x = real_features(graph.features)
        if x.shape[1] != self.widths[0]:
            raise ValueError(f"expected {self.widths[0]} input channels, got {x.shape[1]}")
        M, mean_ang = ops if ops is not None else self._mean_operator(graph)
        cache = []
        last = len(self.weights) - 1
        for l, W in enumerate(self.weights):
            z = np.concatenate([x, M @ x, mean_ang], axis=1)
            h = z @ W.T
            x = h if l == last else np.tanh(h)
            cache.append((z, x))
        return x, (M, cache)

    def __call__(self, graph: EncodedGraph) -> np.ndarray:
        return self.forward(graph)[0]

    def act(self, graph: EncodedGraph) -> np.ndarray:
        out = self(graph)
        return out[:, 0] + 1j * out[:, 1]

    def backward(self, cache, upstream: np.ndarray) -> Dict[str, np.ndarray]:
        M, layers = cache
        g = np.asarray(upstream, dtype=np.float64)
        last = len(self.weights) - 1
        grads = {}
        for l in reversed(range(len(self.weights))):
            z, out = layers[l]
            if l != last:
                g = g * (1.0 - out * out)
            W = self.weights[l]
            grads[f"layers.{l}.W"] = g.T @ z
            gz = g @ W
            k = (W.shape[1] - self.angle_width) // 2
            g = gz[:, :k] + M.T @ gz[:, k:2 * k]
        return grads


def baseline_forward(net: BaselineGNN, graph: EncodedGraph) -> np.ndarray:
    return net(graph)


def baseline_backward(net: BaselineGNN, graph: EncodedGraph, upstream: np.ndarray):
    _, cache = net.forward(graph)
    return net.backward(cache, upstream)
