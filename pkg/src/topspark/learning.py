"""Trace-based STDP rules and per-neuron weight normalization.

Both rules are triggered by post-synaptic spikes:

    dw[i, j] = eta * (pre_trace[i] - x_target) * (w_max - w[i, j]) ** mu

``stdp1`` uses ``eta = eta_pre``. ``stdp2`` scales ``eta_pre`` by an
activity multiplier so that a sample carrying fewer input spikes than the
reference amount learns proportionally harder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractViolation
from .neuron import NetworkState

RULES = ("stdp1", "stdp2")


@dataclass(frozen=True)
class StdpConfig:
    rule: str = "stdp1"
    eta_pre: float = 0.01
    eta_post: float = 0.0
    x_target: float = 0.0
    mu: float = 1.0
    w_max: float = 1.0
    tau_pre: float = 20.0
    tau_post: float = 20.0
    # number, "auto" (0.1 mV per input) or "off"
    norm_total: float | str = "auto"
    alr_floor: float = 0.1
    # expected input spikes per sample at the original timestep; None -> estimated from data
    reference_pre_spikes: float | None = None

    def __post_init__(self):
        rule = str(self.rule).lower()
        if rule not in RULES:
            raise ConfigError(f"rule must be one of {RULES}, got {self.rule!r}")
        object.__setattr__(self, "rule", rule)
        if not self.eta_pre > 0:
            raise ConfigError("eta_pre must be > 0")
        if self.eta_post < 0:
            raise ConfigError("eta_post must be >= 0")
        if not self.w_max > 0:
            raise ConfigError("w_max must be > 0")
        if self.mu < 0:
            raise ConfigError("mu must be >= 0")
        if not (self.tau_pre > 0 and self.tau_post > 0):
            raise ConfigError("tau_pre and tau_post must be > 0")
        if not 0 < self.alr_floor <= 1:
            raise ConfigError("alr_floor must lie in (0, 1]")
        if isinstance(self.norm_total, str):
            if self.norm_total not in ("auto", "off"):
                raise ConfigError(f"norm_total must be a number, 'auto' or 'off', got {self.norm_total!r}")
        elif not self.norm_total > 0:
            raise ConfigError("norm_total must be > 0")
        if self.reference_pre_spikes is not None and not self.reference_pre_spikes > 0:
            raise ConfigError("reference_pre_spikes must be > 0")

    def resolved_norm_total(self, n_inputs: int) -> float | None:
        if self.norm_total == "off":
            return None
        if self.norm_total == "auto":
            return 0.1 * n_inputs
        return float(self.norm_total)


def decay_traces(
    state: NetworkState,
    cfg: StdpConfig,
    pre_spikes: np.ndarray | None = None,
    post_spikes: np.ndarray | None = None,
) -> NetworkState:
    """Exponential trace decay, then reset-to-one for channels/neurons that spiked."""
    state.pre_trace *= math.exp(-1.0 / cfg.tau_pre)
    state.post_trace *= math.exp(-1.0 / cfg.tau_post)
    if pre_spikes is not None:
        state.pre_trace[np.asarray(pre_spikes).astype(bool)] = 1.0
    if post_spikes is not None:
        state.post_trace[np.asarray(post_spikes).astype(bool)] = 1.0
    return state


def potentiate(state: NetworkState, cfg: StdpConfig, fired: np.ndarray, eta: float) -> NetworkState:
    """Apply the post-spike-triggered update with learning rate ``eta`` to the fired columns."""
    cols = np.flatnonzero(fired)
    if cols.size == 0:
        return state
    w = state.weights[:, cols]
    dw = eta * (state.pre_trace - cfg.x_target)[:, None] * (cfg.w_max - w) ** cfg.mu
    state.weights[:, cols] = np.clip(w + dw, 0.0, cfg.w_max)
    return state


def stdp1_on_post_spike(state: NetworkState, cfg: StdpConfig, fired: np.ndarray) -> NetworkState:
    """Pair-based weight-dependent update of every column whose neuron fired."""
    return potentiate(state, cfg, np.asarray(fired), cfg.eta_pre)


def learning_rate_multiplier(
    cfg: StdpConfig, sample_pre_spike_count: int, reference_pre_spikes: float | None = None
) -> float:
    """Activity multiplier ``m`` used by stdp2, clipped to [alr_floor, 1 / alr_floor]."""
    if sample_pre_spike_count < 0:
        raise ContractViolation("sample_pre_spike_count must be >= 0")
    ref = cfg.reference_pre_spikes if reference_pre_spikes is None else reference_pre_spikes
    if ref is None:
        raise ConfigError("stdp2 needs reference_pre_spikes")
    m = ref / max(1, sample_pre_spike_count)
    return min(max(cfg.alr_floor, m), 1.0 / cfg.alr_floor)


def stdp2_on_post_spike(
    state: NetworkState,
    cfg: StdpConfig,
    fired: np.ndarray,
    sample_pre_spike_count: int,
    reference_pre_spikes: float | None = None,
) -> NetworkState:
    m = learning_rate_multiplier(cfg, sample_pre_spike_count, reference_pre_spikes)
    return potentiate(state, cfg, np.asarray(fired), cfg.eta_pre * m)


def depress_on_pre_spike(state: NetworkState, cfg: StdpConfig, pre_spikes: np.ndarray) -> NetworkState:
    """Pre-spike-triggered depression ``-eta_post * post_trace * w ** mu``; no-op when eta_post is 0."""
    if cfg.eta_post == 0:
        return state
    rows = np.flatnonzero(pre_spikes)
    if rows.size == 0:
        return state
    w = state.weights[rows]
    dw = cfg.eta_post * state.post_trace[None, :] * w ** cfg.mu
    state.weights[rows] = np.clip(w - dw, 0.0, cfg.w_max)
    return state


def _waterfill(col: np.ndarray, total: float, w_max: float) -> None:
    sat = col >= w_max
    while True:
        col[sat] = w_max
        remaining = total - w_max * sat.sum()
        free = col[~sat]
        free_sum = free.sum()
        if remaining <= 0 or free_sum == 0:
            return
        col[~sat] = free / free_sum * remaining
        new_sat = col >= w_max
        if np.array_equal(new_sat, sat):
            return
        sat = new_sat


def normalize_weights(state: NetworkState, cfg: StdpConfig, total: float | None = None) -> NetworkState:
    """Rescale every non-zero weight column so it sums to the normalization total.

    Columns that would exceed ``w_max`` are water-filled: saturated weights
    are pinned at ``w_max`` and the rest rescaled to make up the total.
    Columns already on target (relative 1e-12) are left bit-identical, which
    makes the operation idempotent.
    """
    if total is None:
        total = cfg.resolved_norm_total(state.n_inputs)
    if total is None:
        return state
    w = state.weights
    sums = w.sum(axis=0)
    todo = (sums > 0) & (np.abs(sums - total) > 1e-12 * total)
    if not todo.any():
        return state
    cols = np.flatnonzero(todo)
    w[:, cols] = w[:, cols] / sums[cols] * total
    for j in cols[(w[:, cols] > cfg.w_max).any(axis=0)]:
        col = w[:, j].copy()
        _waterfill(col, total, cfg.w_max)
        w[:, j] = col
    return state
