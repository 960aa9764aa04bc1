"""TSPK model checkpoints.

Layout (all integers little-endian):

    offset  size            field
    0       4               magic  b"TSPK"
    4       4   u32         format version (1)
    8       4   u32         N, excitatory neurons
    12      4   u32         input dimension D
    16      4   u32         timestep T the network was trained at
    20      8*D*N  f64 LE   weights, row-major (D, N): input i, neuron j at i*N + j
    ...     8*N    f64 LE   theta, one adaptive offset per neuron

Nothing follows theta; files with trailing bytes are rejected.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CheckpointError
from .neuron import NetworkState, NeuronParams

MAGIC = b"TSPK"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")
_F64 = np.dtype("<f8")


@dataclass
class Checkpoint:
    weights: np.ndarray
    theta: np.ndarray
    timestep: int

    @property
    def n_neurons(self) -> int:
        return self.weights.shape[1]

    @property
    def input_dim(self) -> int:
        return self.weights.shape[0]

    def to_state(self, params: NeuronParams, w_max: float = 1.0) -> NetworkState:
        state = NetworkState.create(self.input_dim, self.n_neurons, params, w_max=w_max)
        state.weights = self.weights.astype(np.float64, copy=True)
        state.theta = self.theta.astype(np.float64, copy=True)
        return state


def to_bytes(state: NetworkState, timestep: int) -> bytes:
    d, n = state.weights.shape
    if state.theta.shape != (n,):
        raise CheckpointError(f"theta has shape {state.theta.shape}, expected ({n},)")
    header = _HEADER.pack(MAGIC, VERSION, n, d, int(timestep))
    return header + state.weights.astype(_F64).tobytes(order="C") + state.theta.astype(_F64).tobytes()


def from_bytes(data: bytes, source: str = "<bytes>") -> Checkpoint:
    if len(data) < _HEADER.size:
        raise CheckpointError(f"{source}: {len(data)} bytes is shorter than the {_HEADER.size}-byte header")
    magic, version, n, d, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise CheckpointError(f"{source}: unsupported version {version}")
    if n < 1 or d < 1 or t < 1:
        raise CheckpointError(f"{source}: header has N={n}, input dim={d}, T={t}; all must be >= 1")
    expected = _HEADER.size + 8 * (d * n + n)
    if len(data) != expected:
        raise CheckpointError(f"{source}: expected {expected} bytes for N={n}, D={d}, got {len(data)}")
    body = np.frombuffer(data, dtype=_F64, offset=_HEADER.size)
    weights = body[: d * n].reshape(d, n).astype(np.float64)
    theta = body[d * n:].astype(np.float64)
    if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(theta))):
        raise CheckpointError(f"{source}: non-finite weights or theta")
    if weights.min() < 0 or theta.min() < 0:
        raise CheckpointError(f"{source}: negative weights or theta")
    return Checkpoint(weights, theta, int(t))


def save(path, state: NetworkState, timestep: int) -> None:
    Path(path).write_bytes(to_bytes(state, timestep))


def load(path) -> Checkpoint:
    return from_bytes(Path(path).read_bytes(), str(path))
