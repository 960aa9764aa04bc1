"""Experiment configuration: one TOML file plus command-line overrides.

Precedence, lowest to highest: built-in defaults, the config file, flags.
Every table and key is checked against the schema below; an unknown key
is rejected with its dotted name. The whole config is validated before
any command touches data or writes a file.

    seed = 0

    [run]       timestep, n_neurons, epochs, init_scale, t0, technique
    [neuron]    v_th, v_reset, v_rest, t_ref, theta_plus, tau_mem, tau_theta,
                inhibition, inhibition_strength
    [encoder]   rate_gain, min_output_spikes, gain_boost, max_retries
    [stdp]      rule, eta_pre, eta_post, x_target, mu, w_max, tau_pre, tau_post,
                norm_total, alr_floor, reference_pre_spikes
    [cost]      t_step, c_neuron, c_syn, c_learn, p_static
    [sweep]     grid, techniques, jobs
    [tradeoff]  tau, epsilon, min_accuracy, max_l_n, max_e_n, phase
    [data]      train_images, train_labels, test_images, test_labels,
                n_train, n_test, split_seed
    [output]    dir

Relative data and output paths in a file are resolved against the file's
directory; paths given as flags are used as given.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .cost import CostTable
from .encoding import EncoderConfig
from .errors import ConfigError, TopsparkError
from .learning import StdpConfig
from .neuron import NeuronParams
from .pipeline import RunConfig
from .sweep import PHASE_COSTS, TECHNIQUES
from .tradeoff import Constraints, TradeoffWeights


@dataclass(frozen=True)
class RunSection:
    timestep: int = 350
    n_neurons: int = 100
    epochs: int = 1
    init_scale: float = 0.3
    # original timestep that topspark enhancement scales from
    t0: int = 350
    technique: str = "direct"


@dataclass(frozen=True)
class SweepSection:
    grid: tuple = (350, 100, 30, 10)
    techniques: tuple = TECHNIQUES
    jobs: int = 1


@dataclass(frozen=True)
class TradeoffSection:
    tau: float = 0.0
    epsilon: float = 0.0
    min_accuracy: float = 0.0
    max_l_n: float = math.inf
    max_e_n: float = math.inf
    phase: str = "infer"

    @property
    def weights(self) -> TradeoffWeights:
        return TradeoffWeights(self.tau, self.epsilon)

    @property
    def constraints(self) -> Constraints:
        return Constraints(self.min_accuracy, self.max_l_n, self.max_e_n)


@dataclass(frozen=True)
class DataSection:
    train_images: str | None = None
    train_labels: str | None = None
    test_images: str | None = None
    test_labels: str | None = None
    n_train: int | None = None
    n_test: int | None = None
    split_seed: int | None = None


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"


_ENCODER_KEYS = ("rate_gain", "min_output_spikes", "gain_boost", "max_retries")


@dataclass(frozen=True)
class CliConfig:
    seed: int = 0
    run: RunSection = field(default_factory=RunSection)
    neuron: NeuronParams = field(default_factory=NeuronParams)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    stdp: StdpConfig = field(default_factory=StdpConfig)
    cost: CostTable = field(default_factory=CostTable)
    sweep: SweepSection = field(default_factory=SweepSection)
    tradeoff: TradeoffSection = field(default_factory=TradeoffSection)
    data: DataSection = field(default_factory=DataSection)
    output: OutputSection = field(default_factory=OutputSection)

    def run_config(self, timestep: int | None = None, technique: str | None = None) -> RunConfig:
        """RunConfig at ``timestep`` (default run.timestep), enhanced when the technique is topspark."""
        from .sweep import point_params

        t = self.run.timestep if timestep is None else timestep
        params = point_params(self.neuron, technique or self.run.technique, self.run.t0, t)
        return RunConfig(
            timestep=t,
            n_neurons=self.run.n_neurons,
            epochs=self.run.epochs,
            neuron=params,
            encoder=replace(self.encoder, seed=self.seed),
            stdp=self.stdp,
            seed=self.seed,
            init_scale=self.run.init_scale,
        )


_SECTIONS = {
    "run": RunSection,
    "neuron": NeuronParams,
    "encoder": EncoderConfig,
    "stdp": StdpConfig,
    "cost": CostTable,
    "sweep": SweepSection,
    "tradeoff": TradeoffSection,
    "data": DataSection,
    "output": OutputSection,
}
_PATH_KEYS = {("data", k) for k in ("train_images", "train_labels", "test_images", "test_labels")} | {("output", "dir")}

# flag name -> (section, key); section None means top level
FLAG_KEYS = {
    "seed": (None, "seed"),
    "timestep": ("run", "timestep"),
    "neurons": ("run", "n_neurons"),
    "rule": ("stdp", "rule"),
    "technique": ("run", "technique"),
    "out": ("output", "dir"),
}


def _allowed(section: str) -> set[str]:
    if section == "encoder":
        return set(_ENCODER_KEYS)
    return {f.name for f in fields(_SECTIONS[section])}


def _check_int(name: str, value: Any, minimum: int) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")


def _merge(tree: dict, base_dir: Path | None) -> dict:
    """Check ``tree`` against the schema and return it with paths resolved."""
    out: dict = {}
    for key, value in tree.items():
        if key == "seed":
            _check_int("seed", value, 0)
            out["seed"] = value
            continue
        if key not in _SECTIONS:
            raise ConfigError(f"unknown config key {key!r}")
        if not isinstance(value, dict):
            raise ConfigError(f"{key!r} must be a table")
        allowed = _allowed(key)
        section = {}
        for sub, v in value.items():
            if sub not in allowed:
                raise ConfigError(f"unknown config key '{key}.{sub}'")
            if (key, sub) in _PATH_KEYS and base_dir is not None:
                v = str(base_dir / v)
            section[sub] = v
        out[key] = section
    return out


def _build(tree: dict) -> CliConfig:
    seed = tree.get("seed", 0)
    parts = {}
    for name, cls in _SECTIONS.items():
        values = dict(tree.get(name, {}))
        for k in ("grid", "techniques"):
            if k in values:
                if not isinstance(values[k], list):
                    raise ConfigError(f"{name}.{k} must be a list")
                values[k] = tuple(values[k])
        try:
            parts[name] = cls(**values)
        except TypeError as exc:
            raise ConfigError(f"[{name}]: {exc}") from None
        except TopsparkError as exc:
            raise ConfigError(f"[{name}]: {exc}") from None
    cfg = CliConfig(seed=seed, **parts)
    validate(cfg)
    return cfg


def validate(cfg: CliConfig) -> None:
    """Cross-field checks that the component dataclasses cannot see on their own."""
    _check_int("seed", cfg.seed, 0)
    r = cfg.run
    _check_int("run.timestep", r.timestep, 1)
    _check_int("run.t0", r.t0, 1)
    _check_int("run.n_neurons", r.n_neurons, 1)
    _check_int("run.epochs", r.epochs, 1)
    if not 0 <= r.init_scale <= 1:
        raise ConfigError("run.init_scale must lie in [0, 1]")
    if r.technique not in TECHNIQUES:
        raise ConfigError(f"run.technique must be one of {TECHNIQUES}, got {r.technique!r}")
    if r.technique == "topspark" and r.timestep > r.t0:
        raise ConfigError(f"run.timestep {r.timestep} exceeds run.t0 {r.t0}; enhancement only reduces")
    s = cfg.sweep
    if not s.grid:
        raise ConfigError("sweep.grid is empty")
    for t in s.grid:
        _check_int("sweep.grid entry", t, 1)
        if t > r.t0:
            raise ConfigError(f"sweep.grid entry {t} exceeds run.t0 {r.t0}")
    if not s.techniques or any(t not in TECHNIQUES for t in s.techniques):
        raise ConfigError(f"sweep.techniques must be a non-empty subset of {TECHNIQUES}, got {list(s.techniques)}")
    _check_int("sweep.jobs", s.jobs, 1)
    t = cfg.tradeoff
    if t.phase not in PHASE_COSTS:
        raise ConfigError(f"tradeoff.phase must be one of {PHASE_COSTS}, got {t.phase!r}")
    try:
        t.weights
    except TopsparkError as exc:
        raise ConfigError(f"[tradeoff]: {exc}") from None
    d = cfg.data
    for name in ("n_train", "n_test"):
        if getattr(d, name) is not None:
            _check_int(f"data.{name}", getattr(d, name), 1)
    if d.split_seed is not None:
        _check_int("data.split_seed", d.split_seed, 0)
    if (d.test_images is None) != (d.test_labels is None):
        raise ConfigError("data.test_images and data.test_labels must be given together")
    if (d.train_images is None) != (d.train_labels is None):
        raise ConfigError("data.train_images and data.train_labels must be given together")
    if d.train_images is not None and d.test_images is None and (d.n_train is None or d.n_test is None):
        raise ConfigError("without test files, data.n_train and data.n_test are needed to split the training files")
    try:
        cfg.run_config()
    except TopsparkError as exc:
        raise ConfigError(str(exc)) from None


def read_tree(path) -> tuple[dict, Path]:
    """Parse a TOML config file; I/O errors propagate as OSError."""
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            tree = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return tree, path.parent


def load_config(path=None, overrides: dict | None = None) -> CliConfig:
    """Defaults <- config file <- ``overrides`` ({flag name: value}, None values ignored)."""
    tree: dict = {}
    if path is not None:
        raw, base_dir = read_tree(path)
        tree = _merge(raw, base_dir)
    for flag, value in (overrides or {}).items():
        if value is None:
            continue
        if flag not in FLAG_KEYS:
            raise ConfigError(f"unknown override {flag!r}")
        section, key = FLAG_KEYS[flag]
        if section is None:
            tree[key] = value
        else:
            tree.setdefault(section, {})[key] = value
    return _build(tree)
