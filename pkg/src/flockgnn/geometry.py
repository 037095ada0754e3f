"""SO(2) rotations, their unit-complex representation and the R^2 <-> C map.

Complex scalars are plain Python ``complex`` (or numpy ``complex128`` when
vectorized); complex matrices are dense ``complex128`` arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def canonical_angle(theta):
    """Wrap angle(s) into [-pi, pi)."""
    wrapped = np.mod(np.asarray(theta, dtype=np.float64) + np.pi, 2.0 * np.pi) - np.pi
    # fmod rounding can land exactly on +pi
    wrapped = np.where(wrapped >= np.pi, wrapped - 2.0 * np.pi, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class Rotation:
    angle: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.angle):
            raise ValueError(f"rotation angle must be finite, got {self.angle}")
        object.__setattr__(self, "angle", canonical_angle(self.angle))

    def compose(self, other: "Rotation") -> "Rotation":
        return Rotation(self.angle + other.angle)

    def inverse(self) -> "Rotation":
        return Rotation(-self.angle)

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, -s], [s, c]])


def compose(a: Rotation, b: Rotation) -> Rotation:
    return a.compose(b)


def inverse(r: Rotation) -> Rotation:
    return r.inverse()


def rho(r: Rotation) -> complex:
    """Unit complex number e^{j*angle} representing ``r``."""
    return complex(math.cos(r.angle), math.sin(r.angle))


def rho_angles(angles) -> np.ndarray:
    """Vectorized rho over an array of angles."""
    return np.exp(1j * np.asarray(angles, dtype=np.float64))


def embed(v) -> complex:
    x, y = v
    return complex(float(x), float(y))


def extract(c) -> tuple[float, float]:
    c = complex(c)
    return (c.real, c.imag)


def embed_many(vs: np.ndarray) -> np.ndarray:
    """(n, 2) real array -> (n,) complex array."""
    vs = np.asarray(vs, dtype=np.float64)
    return vs[..., 0] + 1j * vs[..., 1]


def extract_many(cs: np.ndarray) -> np.ndarray:
    cs = np.asarray(cs, dtype=np.complex128)
    return np.stack([cs.real, cs.imag], axis=-1)


def rotate(c, r: Rotation) -> complex:
    return rho(r) * complex(c)


def cmatvec(W: np.ndarray, x: np.ndarray) -> np.ndarray:
    W = np.asarray(W, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    if W.ndim != 2 or x.ndim != 1 or W.shape[1] != x.shape[0]:
        raise ValueError(f"shape mismatch: W is {W.shape}, x is {x.shape}")
    return W @ x
