"""Accuracy/latency/energy trade-off score and constrained design-point selection."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

from .errors import ContractViolation


@dataclass(frozen=True)
class TradeoffWeights:
    tau: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        if not (self.tau >= 0 and self.epsilon >= 0):
            raise ContractViolation(
                f"tau and epsilon must be non-negative, got tau={self.tau}, epsilon={self.epsilon}"
            )
        if not (math.isfinite(self.tau) and math.isfinite(self.epsilon)):
            raise ContractViolation("tau and epsilon must be finite")


def tradeoff_score(accuracy: float, l_n: float, e_n: float, weights: TradeoffWeights) -> float:
    """``accuracy - (tau * l_n + epsilon * e_n)``."""
    if not 0 <= accuracy <= 1:
        raise ContractViolation(f"accuracy must lie in [0, 1], got {accuracy}")
    return accuracy - (weights.tau * l_n + weights.epsilon * e_n)


class Scored(Protocol):
    t1: int
    technique: str
    accuracy: float
    l_n: float
    e_n: float
    score: float


@dataclass(frozen=True)
class Constraints:
    min_accuracy: float = 0.0
    max_l_n: float = math.inf
    max_e_n: float = math.inf

    def violation(self, rec: Scored) -> float:
        """Summed shortfall over the three limits; 0 means feasible."""
        return (
            max(0.0, self.min_accuracy - rec.accuracy)
            + max(0.0, rec.l_n - self.max_l_n)
            + max(0.0, rec.e_n - self.max_e_n)
        )

    def admits(self, rec: Scored) -> bool:
        return rec.accuracy >= self.min_accuracy and rec.l_n <= self.max_l_n and rec.e_n <= self.max_e_n


@dataclass(frozen=True)
class Infeasible:
    """No design point meets the constraints; ``nearest_miss`` violates them least."""

    nearest_miss: Scored
    violation: float


def _rank(rec: Scored):
    # higher score first, then the cheaper (smaller) timestep, then technique name
    return (-rec.score, rec.t1, rec.technique)


def select_best(records: Sequence[Scored], constraints: Constraints | None = None):
    """Highest-scoring record that satisfies ``constraints``, or an :class:`Infeasible` marker."""
    if not records:
        raise ContractViolation("cannot select from an empty sweep")
    constraints = constraints or Constraints()
    feasible = [r for r in records if constraints.admits(r)]
    if feasible:
        return min(feasible, key=_rank)
    nearest = min(records, key=lambda r: (constraints.violation(r), _rank(r)))
    return Infeasible(nearest, constraints.violation(nearest))
