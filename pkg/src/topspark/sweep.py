"""Timestep sweeps comparing direct reduction against parameter enhancement.

Each sweep point trains a fresh network at timestep ``t1``, labels its
neurons on the training set and measures test accuracy. ``direct`` keeps
the original neuron parameters; ``topspark`` rescales them with
:func:`enhance_all` first. Costs are normalized against the ``direct``
run at ``t0``, which is executed even when the grid or technique list
leaves it out.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

from . import pipeline
from .cost import CostReport, CostTable, OpCounts, cost_model
from .dataset import LabeledDataset
from .enhance import enhance_all
from .errors import ContractViolation
from .neuron import NeuronParams
from .pipeline import RunConfig
from .tradeoff import TradeoffWeights, tradeoff_score

log = logging.getLogger(__name__)

TECHNIQUES = ("direct", "topspark")
PHASE_COSTS = ("infer", "train")
FORMAT_NAME = "topspark-sweep"
FORMAT_VERSION = 1

CSV_COLUMNS = [
    "technique", "t1", "accuracy", "l_n", "e_n", "score",
    "timesteps", "neuron_updates", "synaptic_events", "learning_updates", "latency", "energy",
    "train_l_n", "train_e_n", "train_timesteps", "train_neuron_updates",
    "train_synaptic_events", "train_learning_updates", "train_latency", "train_energy",
]


@dataclass
class PointOutcome:
    accuracy: float
    train_counts: OpCounts
    infer_counts: OpCounts
    params: NeuronParams


@dataclass
class SweepRecord:
    t1: int
    technique: str
    accuracy: float
    l_n: float
    e_n: float
    score: float
    cost: CostReport
    train_cost: CostReport
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "technique": self.technique,
            "t1": self.t1,
            "accuracy": self.accuracy,
            "l_n": self.l_n,
            "e_n": self.e_n,
            "score": self.score,
            "cost": self.cost.to_dict(),
            "train_cost": self.train_cost.to_dict(),
            "params": self.params,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepRecord":
        return cls(
            t1=int(d["t1"]),
            technique=str(d["technique"]),
            accuracy=float(d["accuracy"]),
            l_n=float(d["l_n"]),
            e_n=float(d["e_n"]),
            score=float(d["score"]),
            cost=CostReport(**d["cost"]),
            train_cost=CostReport(**d["train_cost"]),
            params=dict(d.get("params", {})),
        )


@dataclass
class SweepResult:
    t0: int
    records: list[SweepRecord]
    weights: TradeoffWeights = field(default_factory=TradeoffWeights)
    phase: str = "infer"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.records = sorted(self.records, key=lambda r: (r.t1, r.technique))

    def get(self, technique: str, t1: int) -> SweepRecord:
        for rec in self.records:
            if rec.technique == technique and rec.t1 == t1:
                return rec
        raise KeyError((technique, t1))

    def rescored(self, weights: TradeoffWeights, phase: str = "infer") -> "SweepResult":
        """Same records scored with other adjustment factors and/or the training-phase costs."""
        if phase not in PHASE_COSTS:
            raise ContractViolation(f"phase must be one of {PHASE_COSTS}, got {phase!r}")
        out = []
        for rec in self.records:
            report = rec.cost if phase == "infer" else rec.train_cost
            out.append(replace(
                rec,
                l_n=report.l_n,
                e_n=report.e_n,
                score=tradeoff_score(rec.accuracy, report.l_n, report.e_n, weights),
            ))
        return SweepResult(self.t0, out, weights, phase, dict(self.meta))

    def to_json(self) -> str:
        doc = {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "t0": self.t0,
            "phase": self.phase,
            "weights": asdict(self.weights),
            "meta": self.meta,
            "records": [r.to_dict() for r in self.records],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SweepResult":
        doc = json.loads(text)
        if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
            raise ContractViolation("not a sweep document")
        if doc.get("version") != FORMAT_VERSION:
            raise ContractViolation(f"unsupported sweep document version {doc.get('version')!r}")
        return cls(
            t0=int(doc["t0"]),
            records=[SweepRecord.from_dict(r) for r in doc["records"]],
            weights=TradeoffWeights(**doc.get("weights", {})),
            phase=doc.get("phase", "infer"),
            meta=doc.get("meta", {}),
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.records:
            c, t = r.cost, r.train_cost
            writer.writerow([
                r.technique, r.t1, repr(r.accuracy), repr(r.l_n), repr(r.e_n), repr(r.score),
                c.timesteps, c.neuron_updates, c.synaptic_events, c.learning_updates,
                repr(c.latency), repr(c.energy),
                repr(t.l_n), repr(t.e_n), t.timesteps, t.neuron_updates,
                t.synaptic_events, t.learning_updates, repr(t.latency), repr(t.energy),
            ])
        return buf.getvalue()

    def write(self, csv_path, json_path) -> None:
        Path(csv_path).write_text(self.to_csv())
        Path(json_path).write_text(self.to_json())

    def table(self) -> str:
        lines = [f"{'technique':<9} {'t1':>5} {'accuracy':>8} {'l_n':>7} {'e_n':>7} {'score':>8}"]
        for r in self.records:
            lines.append(
                f"{r.technique:<9} {r.t1:>5} {r.accuracy:>8.4f} {r.l_n:>7.4f} {r.e_n:>7.4f} {r.score:>8.4f}"
            )
        return "\n".join(lines)


def point_params(base: NeuronParams, technique: str, t0: int, t1: int) -> NeuronParams:
    if technique not in TECHNIQUES:
        raise ContractViolation(f"technique must be one of {TECHNIQUES}, got {technique!r}")
    return enhance_all(base, t0, t1) if technique == "topspark" else base


def run_point(
    train_set: LabeledDataset,
    test_set: LabeledDataset,
    cfg: RunConfig,
    t1: int,
    params: NeuronParams,
    label_set: LabeledDataset | None = None,
    reference_spikes: float | None = None,
) -> PointOutcome:
    """Train, label and evaluate one network at timestep ``t1`` with ``params``."""
    point_cfg = replace(cfg, timestep=t1, neuron=params, phase="train")
    train_counts, infer_counts = OpCounts(), OpCounts()
    state = pipeline.train(train_set, point_cfg, counts=train_counts, reference_spikes=reference_spikes)
    labels = pipeline.assign_labels(
        label_set if label_set is not None else train_set,
        point_cfg.with_phase("label"), state, counts=train_counts,
    )
    acc = pipeline.evaluate_accuracy(test_set, point_cfg.with_phase("infer"), state, labels, counts=infer_counts)
    return PointOutcome(acc, train_counts, infer_counts, params)


def _run_point_args(args):
    return run_point(*args)


def sweep(
    train_set: LabeledDataset,
    test_set: LabeledDataset,
    cfg: RunConfig,
    grid: Iterable[int],
    techniques: Iterable[str] = TECHNIQUES,
    weights: TradeoffWeights | None = None,
    t0: int | None = None,
    cost_table: CostTable | None = None,
    label_set: LabeledDataset | None = None,
    jobs: int = 1,
    progress: Callable[[str, int, PointOutcome], None] | None = None,
) -> SweepResult:
    """Run every (t1, technique) point of the grid and score it against the t0 baseline.

    ``t0`` defaults to ``cfg.timestep``. Points whose effective neuron
    parameters coincide (``topspark`` at ``t0`` equals ``direct`` at ``t0``)
    are simulated once.
    """
    grid = sorted({int(t) for t in grid})
    techniques = list(dict.fromkeys(techniques))
    if not grid:
        raise ContractViolation("timestep grid is empty")
    if not techniques:
        raise ContractViolation("no techniques requested")
    t0 = cfg.timestep if t0 is None else int(t0)
    if grid[0] < 1 or grid[-1] > t0:
        raise ContractViolation(f"grid entries must lie in [1, {t0}], got {grid}")
    weights = weights or TradeoffWeights()
    cost_table = cost_table or CostTable()
    base = cfg.neuron

    reference_spikes = None
    if cfg.stdp.rule == "stdp2":
        reference_spikes = cfg.stdp.reference_pre_spikes or pipeline.reference_pre_spikes(
            train_set, cfg.encoder, t0
        )

    jobs_by_key: dict = {}
    points = [("direct", t0)] + [(tech, t1) for t1 in grid for tech in techniques]
    point_key = {}
    for tech, t1 in points:
        params = point_params(base, tech, t0, t1)
        key = (t1, params)
        point_key[(tech, t1)] = key
        jobs_by_key.setdefault(key, (train_set, test_set, cfg, t1, params, label_set, reference_spikes))

    keys = list(jobs_by_key)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = dict(zip(keys, pool.map(_run_point_args, [jobs_by_key[k] for k in keys])))
    else:
        outcomes = {}
        for key in keys:
            outcomes[key] = run_point(*jobs_by_key[key])
            log.info("t1=%d accuracy=%.4f", key[0], outcomes[key].accuracy)
            if progress is not None:
                progress("point", key[0], outcomes[key])

    n = cfg.n_neurons
    baseline = outcomes[point_key[("direct", t0)]]
    base_infer = cost_model(baseline.infer_counts, cost_table, n)
    base_train = cost_model(baseline.train_counts, cost_table, n)
    records = []
    for tech, t1 in points[1:]:
        out = outcomes[point_key[(tech, t1)]]
        infer = cost_model(out.infer_counts, cost_table, n, base_infer)
        train_cost = cost_model(out.train_counts, cost_table, n, base_train)
        records.append(SweepRecord(
            t1=t1,
            technique=tech,
            accuracy=out.accuracy,
            l_n=infer.l_n,
            e_n=infer.e_n,
            score=tradeoff_score(out.accuracy, infer.l_n, infer.e_n, weights),
            cost=infer,
            train_cost=train_cost,
            params=asdict(out.params),
        ))
    meta = {
        "rule": cfg.stdp.rule,
        "n_neurons": n,
        "seed": cfg.seed,
        "train_set": train_set.name,
        "n_train": len(train_set),
        "test_set": test_set.name,
        "n_test": len(test_set),
        "cost_table": asdict(cost_table),
    }
    return SweepResult(t0, records, weights, "infer", meta)
