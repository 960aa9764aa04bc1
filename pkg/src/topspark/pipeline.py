"""Unsupervised training, neuron labeling and inference over a dataset.

Every sample is presented for ``timestep`` steps starting from a rested
network. Training runs STDP and threshold adaptation online and
normalizes the weight columns once after each sample. Labeling and
inference never touch weights or theta.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import learning
from .cost import OpCounts
from .dataset import LabeledDataset
from .encoding import EncoderConfig, encode, encode_with_retry
from .errors import ConfigError, ContractViolation
from .learning import StdpConfig
from .neuron import NetworkState, NeuronParams, SpikeTrain, reset_state, step_lif
from .seeding import stream

log = logging.getLogger(__name__)

PHASES = ("train", "label", "infer")


@dataclass(frozen=True)
class RunConfig:
    timestep: int = 350
    n_neurons: int = 100
    epochs: int = 1
    phase: str = "train"
    neuron: NeuronParams = field(default_factory=NeuronParams)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    stdp: StdpConfig = field(default_factory=StdpConfig)
    seed: int = 0
    init_scale: float = 0.3

    def __post_init__(self):
        if int(self.timestep) != self.timestep or self.timestep < 1:
            raise ConfigError(f"timestep must be an integer >= 1, got {self.timestep}")
        if int(self.n_neurons) != self.n_neurons or self.n_neurons < 1:
            raise ConfigError(f"n_neurons must be an integer >= 1, got {self.n_neurons}")
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ConfigError(f"epochs must be an integer >= 1, got {self.epochs}")
        if self.phase not in PHASES:
            raise ConfigError(f"phase must be one of {PHASES}, got {self.phase!r}")
        if not 0 <= self.init_scale <= 1:
            raise ConfigError("init_scale must lie in [0, 1]")
        if self.encoder.timestep_count != self.timestep:
            object.__setattr__(self, "encoder", replace(self.encoder, timestep_count=int(self.timestep)))

    def with_phase(self, phase: str) -> "RunConfig":
        return replace(self, phase=phase)


@dataclass
class LabelAssignment:
    label_of_neuron: np.ndarray
    response_matrix: np.ndarray

    def __post_init__(self):
        self.label_of_neuron = np.asarray(self.label_of_neuron, dtype=np.int64)
        self.response_matrix = np.asarray(self.response_matrix, dtype=np.int64)
        if self.response_matrix.ndim != 2 or self.response_matrix.shape[0] != self.label_of_neuron.size:
            raise ContractViolation("response_matrix must be (n_neurons, n_classes)")
        if np.any(self.response_matrix < 0):
            raise ContractViolation("response counts must be non-negative")

    @property
    def n_classes(self) -> int:
        return self.response_matrix.shape[1]

    @classmethod
    def from_responses(cls, response_matrix: np.ndarray) -> "LabelAssignment":
        """Argmax class per neuron; ties and silent neurons go to the lowest class id."""
        response_matrix = np.asarray(response_matrix, dtype=np.int64)
        return cls(np.argmax(response_matrix, axis=1), response_matrix)

    def to_dict(self) -> dict:
        return {
            "label_of_neuron": self.label_of_neuron.tolist(),
            "response_matrix": self.response_matrix.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LabelAssignment":
        return cls(np.asarray(data["label_of_neuron"]), np.asarray(data["response_matrix"]))


def new_state(n_inputs: int, cfg: RunConfig) -> NetworkState:
    """Initial network: uniform random weights, normalized when normalization is on."""
    state = NetworkState.create(
        n_inputs, cfg.n_neurons, cfg.neuron, stream(cfg.seed, "init"), cfg.stdp.w_max, cfg.init_scale
    )
    return learning.normalize_weights(state, cfg.stdp)


def reference_pre_spikes(dataset: LabeledDataset, encoder: EncoderConfig, t0: int) -> float:
    """Expected input spikes per sample at timestep ``t0`` for the dataset's mean image."""
    return float(dataset.images.sum(dtype=np.float64) / len(dataset) * encoder.rate_gain * t0)


def present(
    state: NetworkState,
    params: NeuronParams,
    train: SpikeTrain,
    *,
    stdp: StdpConfig | None = None,
    lr_multiplier: float = 1.0,
    counts: OpCounts | None = None,
) -> np.ndarray:
    """Run one encoded sample through the layer; return per-neuron spike counts.

    Learning is active when ``stdp`` is given. The state is not reset here.
    """
    bits = train.bits
    if bits.shape[1] != state.n_inputs:
        raise ContractViolation(f"train has {bits.shape[1]} channels, network has {state.n_inputs} inputs")
    n = state.n_neurons
    spike_counts = np.zeros(n, dtype=np.int64)
    learning_on = stdp is not None
    eta = None if stdp is None else stdp.eta_pre * lr_multiplier
    pre_per_step = bits.sum(axis=1, dtype=np.int64)
    n_learn = 0
    for t in range(bits.shape[0]):
        x = bits[t]
        fired = step_lif(state, params, x, learning=learning_on)
        if learning_on:
            learning.decay_traces(state, stdp, x, fired)
            if stdp.eta_post > 0 and pre_per_step[t]:
                learning.depress_on_pre_spike(state, stdp, x)
                n_learn += int(pre_per_step[t]) * n
            if fired.any():
                learning.potentiate(state, stdp, fired, eta)
                n_learn += int(fired.sum()) * state.n_inputs
        spike_counts += fired
    if counts is not None:
        steps = bits.shape[0]
        n_in = int(pre_per_step.sum())
        counts.timesteps += steps
        counts.neuron_updates += steps * n
        counts.synaptic_events += n_in * n
        counts.learning_updates += n_learn
        counts.presentations += 1
        counts.input_spikes += n_in
        counts.output_spikes += int(spike_counts.sum())
    return spike_counts


def train(
    dataset: LabeledDataset,
    cfg: RunConfig,
    state: NetworkState | None = None,
    counts: OpCounts | None = None,
    reference_spikes: float | None = None,
) -> NetworkState:
    """Unsupervised STDP training for ``cfg.epochs`` passes over ``dataset``.

    ``reference_spikes`` (input spikes per sample at the original timestep)
    is only used by stdp2; it falls back to ``cfg.stdp.reference_pre_spikes``
    and then to an estimate at ``cfg.timestep``.
    """
    if len(dataset) == 0:
        raise ContractViolation("training set is empty")
    if cfg.phase != "train":
        raise ContractViolation(f"train() needs phase 'train', got {cfg.phase!r}")
    if state is None:
        state = new_state(dataset.dim, cfg)
    if state.n_inputs != dataset.dim:
        raise ContractViolation(f"network expects {state.n_inputs} inputs, samples have {dataset.dim}")
    stdp = cfg.stdp
    if stdp.rule == "stdp2":
        if reference_spikes is None:
            reference_spikes = stdp.reference_pre_spikes
        if reference_spikes is None:
            reference_spikes = reference_pre_spikes(dataset, cfg.encoder, cfg.timestep)
    norm_total = stdp.resolved_norm_total(state.n_inputs)
    rng = stream(cfg.seed, "encoder-train")
    params = cfg.neuron

    def run_one(train_bits: SpikeTrain) -> int:
        reset_state(state, params)
        m = 1.0
        if stdp.rule == "stdp2":
            m = learning.learning_rate_multiplier(stdp, train_bits.total(), reference_spikes)
        return int(present(state, params, train_bits, stdp=stdp, lr_multiplier=m, counts=counts).sum())

    for epoch in range(cfg.epochs):
        for i in range(len(dataset)):
            encode_with_retry(dataset.images[i], cfg.encoder, run_one, rng)
            learning.normalize_weights(state, stdp, norm_total)
        log.debug("epoch %d done, theta mean %.3f", epoch, state.theta.mean())
    return state


def _responses(
    dataset: LabeledDataset, cfg: RunConfig, state: NetworkState, rng, counts: OpCounts | None
):
    if state.n_inputs != dataset.dim:
        raise ContractViolation(f"network expects {state.n_inputs} inputs, samples have {dataset.dim}")
    for i in range(len(dataset)):
        reset_state(state, cfg.neuron)
        bits = encode(dataset.images[i], cfg.encoder, rng)
        yield i, present(state, cfg.neuron, bits, counts=counts)


def assign_labels(
    dataset: LabeledDataset,
    cfg: RunConfig,
    state: NetworkState,
    counts: OpCounts | None = None,
    n_classes: int | None = None,
) -> LabelAssignment:
    """Present labeled samples with learning off and give each neuron its argmax class."""
    if len(dataset) == 0:
        raise ContractViolation("labeling set is empty")
    if n_classes is None:
        n_classes = dataset.n_classes
    response = np.zeros((state.n_neurons, n_classes), dtype=np.int64)
    for i, spikes in _responses(dataset, cfg, state, stream(cfg.seed, "encoder-label"), counts):
        response[:, dataset.labels[i]] += spikes
    return LabelAssignment.from_responses(response)


def decide(spike_counts: np.ndarray, labels: LabelAssignment) -> int:
    """Class with the highest mean spike count per assigned neuron; ties -> lowest id.

    Classes without any assigned neuron score zero.
    """
    spike_counts = np.asarray(spike_counts)
    n_classes = labels.n_classes
    totals = np.bincount(labels.label_of_neuron, weights=spike_counts, minlength=n_classes)
    members = np.bincount(labels.label_of_neuron, minlength=n_classes)
    means = np.divide(totals, members, out=np.zeros(n_classes), where=members > 0)
    return int(np.argmax(means))


def classify(
    sample: np.ndarray,
    cfg: RunConfig,
    state: NetworkState,
    labels: LabelAssignment,
    rng: np.random.Generator | None = None,
    counts: OpCounts | None = None,
) -> int:
    if rng is None:
        rng = stream(cfg.seed, "encoder-infer")
    reset_state(state, cfg.neuron)
    spikes = present(state, cfg.neuron, encode(sample, cfg.encoder, rng), counts=counts)
    return decide(spikes, labels)


def predict(
    dataset: LabeledDataset,
    cfg: RunConfig,
    state: NetworkState,
    labels: LabelAssignment,
    counts: OpCounts | None = None,
) -> np.ndarray:
    rng = stream(cfg.seed, "encoder-infer")
    out = np.empty(len(dataset), dtype=np.int64)
    for i, spikes in _responses(dataset, cfg, state, rng, counts):
        out[i] = decide(spikes, labels)
    return out


def evaluate_accuracy(
    test_set: LabeledDataset,
    cfg: RunConfig,
    state: NetworkState,
    labels: LabelAssignment,
    counts: OpCounts | None = None,
) -> float:
    """Fraction of ``test_set`` classified correctly."""
    if len(test_set) == 0:
        raise ContractViolation("test set is empty")
    predicted = predict(test_set, cfg, state, labels, counts)
    return float(np.mean(predicted == test_set.labels))
