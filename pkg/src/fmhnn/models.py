"""Memristor-coupled Hopfield networks: the two-neuron system and its ring extension.

Two-neuron system, state ``(x1, x2, phi)``::

    D^a x1  = -x1 + b1 tanh x1 + b2 tanh x2 + k phi (x1 - x2)
    D^a x2  = -x2 + b3 tanh x1 + b4 tanh x2 - k phi (x1 - x2)
    D^a phi =  x1 - x2

Ring of ``n`` such sub-networks: each ``x1_i`` additionally receives the
diffusive term ``d/(2p) * sum_{j=i-p}^{i+p} (x1_j - x1_i)`` with indices taken
modulo ``n``. Ring states are stored sub-network-major,
``[x1_1, x2_1, phi_1, x1_2, x2_2, phi_2, ...]``; this is the layout of solver
states and of CSV columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fode import ConfigError, SystemDef

__all__ = [
    "FmhnnParams",
    "RingParams",
    "FmhnnState",
    "DEFAULT_PARAMS",
    "rhs_two_neuron",
    "jacobian_two_neuron",
    "rhs_ring",
    "jacobian_ring",
    "two_neuron_system",
    "ring_system",
    "pack_ring_state",
    "unpack_ring_state",
    "ring_neighbors",
]


class DimensionError(ConfigError):
    """State length does not match the model."""


@dataclass(frozen=True)
class FmhnnParams:
    b1: float
    b2: float
    b3: float
    b4: float
    k: float

    def __post_init__(self):
        for name in ("b1", "b2", "b3", "b4", "k"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ConfigError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    @property
    def weights(self) -> np.ndarray:
        """Connection weights as the 2x2 matrix ``[[b1, b2], [b3, b4]]``."""
        return np.array([[self.b1, self.b2], [self.b3, self.b4]])


#: reference weights and memristor coupling strength
DEFAULT_PARAMS = FmhnnParams(b1=-0.1, b2=2.8, b3=-3.0, b4=4.0, k=0.15)


@dataclass(frozen=True)
class RingParams:
    base: FmhnnParams
    n: int
    p: int = 1
    d: float = 0.5

    def __post_init__(self):
        n, p, d = int(self.n), int(self.p), float(self.d)
        if n < 2:
            raise ConfigError("ring needs n >= 2 sub-networks")
        if p < 1:
            raise ConfigError("ring needs p >= 1")
        if not 2 * p < n:
            raise ConfigError(f"ring needs 2p < n, got p={p}, n={n}")
        if not (math.isfinite(d) and d >= 0):
            raise ConfigError("coupling strength d must be finite and >= 0")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "d", d)

    @property
    def dimension(self) -> int:
        return 3 * self.n


@dataclass(frozen=True)
class FmhnnState:
    x1: float
    x2: float
    phi: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.phi], dtype=float)


def _state3(state) -> np.ndarray:
    if isinstance(state, FmhnnState):
        return state.as_array()
    s = np.asarray(state, dtype=float)
    if s.shape != (3,):
        raise DimensionError(f"two-neuron state must have length 3, got shape {s.shape}")
    return s


def rhs_two_neuron(state, params: FmhnnParams) -> np.ndarray:
    x1, x2, phi = _state3(state)
    t1, t2 = math.tanh(x1), math.tanh(x2)
    current = params.k * phi * (x1 - x2)
    return np.array([
        -x1 + params.b1 * t1 + params.b2 * t2 + current,
        -x2 + params.b3 * t1 + params.b4 * t2 - current,
        x1 - x2,
    ])


def jacobian_two_neuron(state, params: FmhnnParams) -> np.ndarray:
    x1, x2, phi = _state3(state)
    s1 = 1.0 / math.cosh(x1) ** 2
    s2 = 1.0 / math.cosh(x2) ** 2
    kp = params.k * phi
    kv = params.k * (x1 - x2)
    return np.array([
        [-1.0 + params.b1 * s1 + kp, params.b2 * s2 - kp, kv],
        [params.b3 * s1 - kp, -1.0 + params.b4 * s2 + kp, -kv],
        [1.0, -1.0, 0.0],
    ])


def pack_ring_state(x1, x2, phi) -> np.ndarray:
    """Interleave per-node arrays into the sub-network-major layout."""
    return np.column_stack([np.asarray(x1, float), np.asarray(x2, float), np.asarray(phi, float)]).ravel()


def unpack_ring_state(state, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    s = np.asarray(state, dtype=float)
    if s.shape != (3 * n,):
        raise DimensionError(f"ring state must have length {3 * n}, got shape {s.shape}")
    s = s.reshape(n, 3)
    return s[:, 0], s[:, 1], s[:, 2]


def ring_neighbors(n: int, p: int) -> list[int]:
    """Offsets ``-p..p`` of the coupling sum (the zero offset contributes nothing)."""
    return list(range(-p, p + 1))


def _ring_rhs_arrays(x1, x2, phi, base: FmhnnParams, n: int, p: int, d: float) -> np.ndarray:
    t1, t2 = np.tanh(x1), np.tanh(x2)
    current = base.k * phi * (x1 - x2)
    out = np.empty((n, 3))
    out[:, 0] = -x1 + base.b1 * t1 + base.b2 * t2 + current
    out[:, 1] = -x2 + base.b3 * t1 + base.b4 * t2 - current
    out[:, 2] = x1 - x2
    if d != 0.0 and p > 0:
        coupling = np.zeros(n)
        for j in ring_neighbors(n, p):
            coupling += np.roll(x1, -j) - x1
        out[:, 0] += d / (2 * p) * coupling
    return out.ravel()


def rhs_ring(state, params: RingParams) -> np.ndarray:
    x1, x2, phi = unpack_ring_state(state, params.n)
    return _ring_rhs_arrays(x1, x2, phi, params.base, params.n, params.p, params.d)


def jacobian_ring(state, params: RingParams) -> np.ndarray:
    n, p, d = params.n, params.p, params.d
    s = np.asarray(state, dtype=float)
    unpack_ring_state(s, n)
    J = np.zeros((3 * n, 3 * n))
    for i in range(n):
        J[3 * i : 3 * i + 3, 3 * i : 3 * i + 3] = jacobian_two_neuron(s[3 * i : 3 * i + 3], params.base)
    c = d / (2 * p)
    for i in range(n):
        for j in ring_neighbors(n, p):
            if j == 0:
                continue
            J[3 * i, 3 * ((i + j) % n)] += c
            J[3 * i, 3 * i] -= c
    return J


def two_neuron_system(params: FmhnnParams = DEFAULT_PARAMS) -> SystemDef:
    return SystemDef(
        dimension=3,
        rhs=lambda t, x, prm: rhs_two_neuron(x, prm),
        jacobian=jacobian_two_neuron,
        params=params,
        native=(params.b1, params.b2, params.b3, params.b4, params.k, 0.0, 1, 0),
    )


def ring_system(params: RingParams) -> SystemDef:
    b = params.base
    return SystemDef(
        dimension=params.dimension,
        rhs=lambda t, x, prm: rhs_ring(x, prm),
        jacobian=jacobian_ring,
        params=params,
        native=(b.b1, b.b2, b.b3, b.b4, b.k, params.d, params.n, params.p),
    )
