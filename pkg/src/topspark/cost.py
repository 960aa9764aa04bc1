"""Deterministic latency/energy model driven by operation counts.

Latency is the number of simulated timesteps times the wall-clock length
of one step. Energy is a weighted sum of counted operations plus a static
term charged per simulated step:

    energy = c_neuron * neuron_updates + c_syn * synaptic_events
             + c_learn * learning_updates + p_static * timesteps

Normalized values are plain ratios against a baseline report.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction

from .errors import ConfigError, ContractViolation


@dataclass
class OpCounts:
    timesteps: int = 0
    neuron_updates: int = 0
    synaptic_events: int = 0
    learning_updates: int = 0
    presentations: int = 0
    input_spikes: int = 0
    output_spikes: int = 0

    def __iadd__(self, other: "OpCounts") -> "OpCounts":
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))
        return self

    def __add__(self, other: "OpCounts") -> "OpCounts":
        out = OpCounts(**asdict(self))
        out += other
        return out


@dataclass(frozen=True)
class CostTable:
    t_step: float = 1e-3
    c_neuron: float = 1.0
    c_syn: float = 1.0
    c_learn: float = 5.0
    # units per simulated step; None -> one unit per neuron
    p_static: float | None = None

    def __post_init__(self):
        if not self.t_step > 0:
            raise ConfigError("t_step must be > 0")
        for name in ("c_neuron", "c_syn", "c_learn"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if self.p_static is not None and not self.p_static > 0:
            raise ConfigError("p_static must be > 0")


@dataclass(frozen=True)
class CostReport:
    neuron_updates: int
    synaptic_events: int
    learning_updates: int
    timesteps: int
    latency: float
    energy: float
    l_n: float = 1.0
    e_n: float = 1.0

    def latency_ratio(self, baseline: "CostReport") -> Fraction:
        return Fraction(self.timesteps, baseline.timesteps)

    def energy_ratio(self, baseline: "CostReport") -> Fraction:
        return Fraction(self.energy) / Fraction(baseline.energy)

    def to_dict(self) -> dict:
        return asdict(self)


def _raw_report(counts: OpCounts, table: CostTable, n_neurons: int) -> CostReport:
    p_static = float(n_neurons) if table.p_static is None else table.p_static
    energy = (
        table.c_neuron * counts.neuron_updates
        + table.c_syn * counts.synaptic_events
        + table.c_learn * counts.learning_updates
        + p_static * counts.timesteps
    )
    return CostReport(
        neuron_updates=counts.neuron_updates,
        synaptic_events=counts.synaptic_events,
        learning_updates=counts.learning_updates,
        timesteps=counts.timesteps,
        latency=table.t_step * counts.timesteps,
        energy=float(energy),
    )


def cost_model(
    counts: OpCounts,
    table: CostTable,
    n_neurons: int,
    baseline: CostReport | None = None,
) -> CostReport:
    """Turn operation counts into a CostReport, normalized against ``baseline``.

    Without a baseline the report is normalized against itself (l_n = e_n = 1).
    """
    if min(counts.timesteps, counts.neuron_updates, counts.synaptic_events, counts.learning_updates) < 0:
        raise ContractViolation("operation counts must be non-negative")
    raw = _raw_report(counts, table, n_neurons)
    ref = raw if baseline is None else baseline
    if ref.timesteps <= 0 or ref.latency <= 0:
        raise ContractViolation("baseline report has zero latency")
    if ref.energy <= 0:
        raise ContractViolation("baseline report has zero energy")
    return normalize(raw, ref)


def normalize(report: CostReport, baseline: CostReport) -> CostReport:
    if baseline.timesteps <= 0 or baseline.energy <= 0:
        raise ContractViolation("baseline report has zero latency or energy")
    return CostReport(
        neuron_updates=report.neuron_updates,
        synaptic_events=report.synaptic_events,
        learning_updates=report.learning_updates,
        timesteps=report.timesteps,
        latency=report.latency,
        energy=report.energy,
        l_n=float(report.latency_ratio(baseline)),
        e_n=float(report.energy_ratio(baseline)),
    )
