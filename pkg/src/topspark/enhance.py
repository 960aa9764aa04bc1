"""Neuron-parameter rescaling for a reduced timestep.

Going from an original timestep ``t0`` to a shorter ``t1`` shrinks the
threshold gap, the refractory period and the adaptation increment by the
ratio ``t1 / t0``:

    v_th1    = v_reset + ceil(t1 / t0 * (v_th0 - v_reset))
    t_ref1   = ceil(t1 / t0 * t_ref0)
    theta1   = t1 / t0 * theta0

The ratios are evaluated in exact rational arithmetic so the ceilings never
pick up float round-off (e.g. ``8 * 175 / 350`` is exactly 4).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

from .errors import ContractViolation
from .neuron import NeuronParams


def _ratio(t0: int, t1: int) -> Fraction:
    if int(t0) != t0 or int(t1) != t1:
        raise ContractViolation(f"timesteps must be integers, got t0={t0}, t1={t1}")
    if t1 < 1:
        raise ContractViolation(f"reduced timestep must be >= 1, got {t1}")
    if t1 > t0:
        raise ContractViolation(f"enhancement only applies to reductions, got t1={t1} > t0={t0}")
    return Fraction(int(t1), int(t0))


def enhance_vth(v_th0: float, v_reset: float, t0: int, t1: int) -> float:
    if not v_th0 > v_reset:
        raise ContractViolation(f"v_th0 ({v_th0}) must exceed v_reset ({v_reset})")
    gap = _ratio(t0, t1) * (Fraction(v_th0) - Fraction(v_reset))
    return float(v_reset + math.ceil(gap))


def enhance_tref(t_ref0: int, t0: int, t1: int) -> int:
    if t_ref0 < 1:
        raise ContractViolation(f"t_ref0 must be >= 1, got {t_ref0}")
    return math.ceil(_ratio(t0, t1) * int(t_ref0))


def enhance_theta(theta0: float, t0: int, t1: int) -> float:
    if theta0 < 0:
        raise ContractViolation(f"theta0 must be >= 0, got {theta0}")
    return float(_ratio(t0, t1) * Fraction(theta0))


def enhance_all(params: NeuronParams, t0: int, t1: int) -> NeuronParams:
    """Apply the three rules to ``params``; every other field is copied as is."""
    return replace(
        params,
        v_th=enhance_vth(params.v_th, params.v_reset, t0, t1),
        t_ref=enhance_tref(params.t_ref, t0, t1),
        theta_plus=enhance_theta(params.theta_plus, t0, t1),
    )


@dataclass(frozen=True)
class EnhancedParams:
    base: NeuronParams
    t0: int
    t1: int
    result: NeuronParams

    @classmethod
    def build(cls, base: NeuronParams, t0: int, t1: int) -> "EnhancedParams":
        return cls(base, t0, t1, enhance_all(base, t0, t1))
