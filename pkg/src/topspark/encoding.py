"""Rate coding of pixel intensities into binary spike trains."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import ConfigError, ContractViolation
from .neuron import SpikeTrain

MAX_INTENSITY = 255

# intensity 255 -> 128 Hz at a 1 ms step
DEFAULT_RATE_GAIN = 0.128 / MAX_INTENSITY


@dataclass(frozen=True)
class EncoderConfig:
    timestep_count: int = 350
    rate_gain: float = DEFAULT_RATE_GAIN
    min_output_spikes: int = 1
    gain_boost: float | None = None  # None -> rate_gain / 2
    max_retries: int = 4
    seed: int = 0

    def __post_init__(self):
        if int(self.timestep_count) != self.timestep_count or self.timestep_count < 1:
            raise ConfigError(f"timestep_count must be an integer >= 1, got {self.timestep_count}")
        if self.rate_gain < 0 or self.rate_gain * MAX_INTENSITY > 1 + 1e-12:
            raise ConfigError(
                f"rate_gain {self.rate_gain} gives a per-step probability outside [0, 1]"
            )
        if self.min_output_spikes < 0:
            raise ConfigError("min_output_spikes must be >= 0")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.gain_boost is not None and self.gain_boost < 0:
            raise ConfigError("gain_boost must be >= 0")

    @property
    def boost(self) -> float:
        return self.rate_gain / 2 if self.gain_boost is None else self.gain_boost


def poisson_pmf(lam: float, k: int) -> float:
    """Probability of exactly ``k`` events for a Poisson process with rate ``lam``."""
    if lam < 0:
        raise ContractViolation(f"lambda must be >= 0, got {lam}")
    if k < 0 or int(k) != k:
        raise ContractViolation(f"k must be a non-negative integer, got {k}")
    if lam == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(lam) - lam - math.lgamma(k + 1))


def encode(
    image: np.ndarray, cfg: EncoderConfig, rng: np.random.Generator | None = None
) -> SpikeTrain:
    """Bernoulli-per-step approximation of a Poisson spike train.

    Channel ``c`` fires at every step independently with probability
    ``image[c] * cfg.rate_gain``.
    """
    image = np.asarray(image, dtype=np.float64).ravel()
    if image.size == 0:
        raise ContractViolation("image must have at least one channel")
    if image.min() < 0 or image.max() > MAX_INTENSITY:
        raise ContractViolation("intensities must lie in [0, 255]")
    p = image * cfg.rate_gain
    if p.max() > 1.0:
        raise ConfigError(f"per-step spike probability {p.max():.6g} exceeds 1")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    bits = rng.random((cfg.timestep_count, image.size)) < p
    return SpikeTrain(bits.astype(np.uint8))


def encode_with_retry(
    image: np.ndarray,
    cfg: EncoderConfig,
    run_one_presentation: Callable[[SpikeTrain], int],
    rng: np.random.Generator | None = None,
) -> SpikeTrain:
    """Present ``image`` and re-present it with a higher gain while the network stays quiet.

    ``run_one_presentation`` receives each encoded train and returns the
    total number of output spikes. The gain grows by ``cfg.boost`` per retry
    and is capped where the brightest intensity would spike every step.
    After ``cfg.max_retries`` retries the last train is accepted.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    gain_cap = 1.0 / MAX_INTENSITY
    attempt_cfg = cfg
    train = encode(image, attempt_cfg, rng)
    out = run_one_presentation(train)
    retries = 0
    while out < cfg.min_output_spikes and retries < cfg.max_retries:
        retries += 1
        gain = min(attempt_cfg.rate_gain + cfg.boost, gain_cap)
        attempt_cfg = replace(attempt_cfg, rate_gain=gain)
        train = encode(image, attempt_cfg, rng)
        out = run_one_presentation(train)
    return train
