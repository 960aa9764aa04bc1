"""Discrete-time LIF excitatory layer with adaptive thresholds and lateral inhibition.

Membrane potentials are plain floats in millivolts and weights are the
membrane deflection (mV) caused by one input spike. One call to
:func:`step_lif` advances the whole layer by one timestep in the order
leak -> integrate -> threshold test -> inhibition -> reset/refractory.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation

INHIBITION_MODES = ("off", "soft", "hard")


@dataclass(frozen=True)
class NeuronParams:
    """LIF and homeostasis constants for the excitatory layer.

    ``t_ref`` counts timesteps. ``theta_plus`` is the per-spike growth of the
    adaptive threshold offset while learning is enabled.
    """

    v_th: float = -52.0
    v_reset: float = -60.0
    v_rest: float = -60.0
    t_ref: int = 5
    theta_plus: float = 1.0
    tau_mem: float = 100.0
    tau_theta: float = 1e5
    inhibition: str = "hard"
    inhibition_strength: float = 0.0

    def __post_init__(self):
        if not self.v_reset < self.v_th:
            raise ContractViolation(
                f"v_reset ({self.v_reset}) must be below v_th ({self.v_th})"
            )
        if isinstance(self.t_ref, bool) or int(self.t_ref) != self.t_ref or self.t_ref < 1:
            raise ContractViolation(f"t_ref must be an integer >= 1, got {self.t_ref!r}")
        if self.theta_plus < 0:
            raise ContractViolation(f"theta_plus must be >= 0, got {self.theta_plus}")
        if not self.tau_mem > 0:
            raise ContractViolation(f"tau_mem must be > 0, got {self.tau_mem}")
        if not self.tau_theta > 0:
            raise ContractViolation(f"tau_theta must be > 0, got {self.tau_theta}")
        if self.inhibition not in INHIBITION_MODES:
            raise ContractViolation(
                f"inhibition must be one of {INHIBITION_MODES}, got {self.inhibition!r}"
            )
        if self.inhibition_strength < 0:
            raise ContractViolation("inhibition_strength must be >= 0")
        object.__setattr__(self, "t_ref", int(self.t_ref))

    @property
    def mem_decay(self) -> float:
        return math.exp(-1.0 / self.tau_mem)

    @property
    def theta_decay(self) -> float:
        return math.exp(-1.0 / self.tau_theta)


@dataclass
class NetworkState:
    """Mutable simulation state of one fully-connected excitatory layer.

    ``weights`` has shape (n_inputs, n_neurons); column ``j`` holds the
    incoming synapses of neuron ``j``.
    """

    v_mem: np.ndarray
    theta: np.ndarray
    refrac_remaining: np.ndarray
    weights: np.ndarray
    pre_trace: np.ndarray
    post_trace: np.ndarray
    w_max: float = 1.0

    @classmethod
    def create(
        cls,
        n_inputs: int,
        n_neurons: int,
        params: NeuronParams,
        rng: np.random.Generator | None = None,
        w_max: float = 1.0,
        init_scale: float = 0.3,
    ) -> "NetworkState":
        """Fresh state at rest; weights drawn uniformly from [0, init_scale * w_max]."""
        if n_inputs < 1 or n_neurons < 1:
            raise ContractViolation("n_inputs and n_neurons must be >= 1")
        if rng is None:
            weights = np.zeros((n_inputs, n_neurons))
        else:
            weights = rng.uniform(0.0, init_scale * w_max, size=(n_inputs, n_neurons))
        return cls(
            v_mem=np.full(n_neurons, float(params.v_rest)),
            theta=np.zeros(n_neurons),
            refrac_remaining=np.zeros(n_neurons, dtype=np.int64),
            weights=weights,
            pre_trace=np.zeros(n_inputs),
            post_trace=np.zeros(n_neurons),
            w_max=float(w_max),
        )

    @property
    def n_inputs(self) -> int:
        return self.weights.shape[0]

    @property
    def n_neurons(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "NetworkState":
        return NetworkState(
            v_mem=self.v_mem.copy(),
            theta=self.theta.copy(),
            refrac_remaining=self.refrac_remaining.copy(),
            weights=self.weights.copy(),
            pre_trace=self.pre_trace.copy(),
            post_trace=self.post_trace.copy(),
            w_max=self.w_max,
        )

    def check(self, t_ref: int | None = None) -> None:
        """Raise ContractViolation if any state invariant is broken."""
        n_in, n = self.weights.shape
        for name, arr, size in (
            ("v_mem", self.v_mem, n),
            ("theta", self.theta, n),
            ("refrac_remaining", self.refrac_remaining, n),
            ("post_trace", self.post_trace, n),
            ("pre_trace", self.pre_trace, n_in),
        ):
            if arr.shape != (size,):
                raise ContractViolation(f"{name} has shape {arr.shape}, expected ({size},)")
        if self.weights.min(initial=0.0) < 0 or self.weights.max(initial=0.0) > self.w_max:
            raise ContractViolation("weights outside [0, w_max]")
        if np.any(self.theta < 0):
            raise ContractViolation("theta must be non-negative")
        if np.any(self.refrac_remaining < 0):
            raise ContractViolation("refrac_remaining must be non-negative")
        if t_ref is not None and np.any(self.refrac_remaining > t_ref):
            raise ContractViolation("refrac_remaining exceeds t_ref")


@dataclass
class SpikeTrain:
    """Binary spike tensor laid out as (timesteps, channels)."""

    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2 or bits.shape[0] < 1 or bits.shape[1] < 1:
            raise ContractViolation(f"spike train must be 2-D and non-empty, got {bits.shape}")
        if bits.dtype != np.uint8:
            if not np.all((bits == 0) | (bits == 1)):
                raise ContractViolation("spike train entries must be 0 or 1")
            bits = bits.astype(np.uint8)
        self.bits = bits

    @property
    def t(self) -> int:
        return self.bits.shape[0]

    @property
    def c(self) -> int:
        return self.bits.shape[1]

    def total(self) -> int:
        return int(self.bits.sum(dtype=np.int64))


def apply_lateral_inhibition(
    spikes: np.ndarray, state: NetworkState, params: NeuronParams | None = None
) -> np.ndarray:
    """Competition among the neurons that crossed threshold this step.

    ``state.v_mem`` must still hold the pre-reset potentials. In ``hard``
    mode only the firing neuron with the highest potential survives (ties
    go to the lowest index) and every other neuron is clamped to
    ``v_reset``, so the next winner has to integrate from scratch. In ``soft`` mode every crossing neuron fires and each
    silent, non-refractory neuron is pushed down by ``inhibition_strength``
    per emitted spike, never below ``v_reset``. ``off`` returns the input.
    """
    spikes = np.asarray(spikes).astype(bool)
    if spikes.shape != state.v_mem.shape:
        raise ContractViolation(
            f"spike vector has shape {spikes.shape}, expected {state.v_mem.shape}"
        )
    mode = "hard" if params is None else params.inhibition
    if mode == "off" or not spikes.any():
        return spikes
    if mode == "hard":
        firing = np.flatnonzero(spikes)
        winner = firing[np.argmax(state.v_mem[firing])]
        out = np.zeros_like(spikes)
        out[winner] = True
        if params is not None:
            state.v_mem[~out] = params.v_reset
        return out
    n_fired = int(spikes.sum())
    silent = ~spikes & (state.refrac_remaining == 0)
    if params.inhibition_strength > 0:
        pushed = state.v_mem[silent] - params.inhibition_strength * n_fired
        state.v_mem[silent] = np.maximum(pushed, params.v_reset)
    return spikes


def step_lif(
    state: NetworkState,
    params: NeuronParams,
    input_spikes: np.ndarray,
    *,
    learning: bool = False,
) -> np.ndarray:
    """Advance the layer by one timestep and return its output spikes (bool, length N).

    A neuron whose refractory countdown is still positive after this step's
    decrement holds its potential, ignores input and stays silent; with
    ``t_ref = 1`` a neuron may therefore fire on consecutive steps. Theta
    only decays and grows when ``learning`` is set, so inference leaves it
    untouched.
    """
    input_spikes = np.asarray(input_spikes)
    if input_spikes.shape != (state.n_inputs,):
        raise ContractViolation(
            f"input has shape {input_spikes.shape}, weights expect ({state.n_inputs},)"
        )
    refrac = state.refrac_remaining
    np.subtract(refrac, 1, out=refrac, where=refrac > 0)
    active = refrac == 0

    active_inputs = np.flatnonzero(input_spikes)
    drive = state.weights[active_inputs].sum(axis=0)

    v = state.v_mem
    leaked = params.v_rest + (v - params.v_rest) * params.mem_decay + drive
    np.copyto(v, leaked, where=active)

    fired = active & (v >= params.v_th + state.theta)
    if fired.any() and params.inhibition != "off":
        fired = apply_lateral_inhibition(fired, state, params)

    v[fired] = params.v_reset
    refrac[fired] = params.t_ref
    if learning:
        state.theta *= params.theta_decay
        state.theta[fired] += params.theta_plus
    return fired


def reset_state(state: NetworkState, params: NeuronParams) -> NetworkState:
    """Return ``state`` to rest between samples, keeping weights and theta."""
    state.v_mem.fill(params.v_rest)
    state.refrac_remaining.fill(0)
    state.pre_trace.fill(0.0)
    state.post_trace.fill(0.0)
    return state
