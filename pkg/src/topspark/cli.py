"""Command-line front end.

    topspark train     train a network, write checkpoint + labels + cost report
    topspark infer     evaluate a checkpoint on the test split
    topspark sweep     run the timestep sweep, write CSV + JSON
    topspark tradeoff  score a sweep JSON and pick a design point
    topspark dataset   info | synth | subset

Exit codes: 0 success, 1 usage or config error, 2 I/O or input-file error,
3 no design point satisfies the trade-off constraints.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__, checkpoint, pipeline
from .config import CliConfig, load_config
from .cost import OpCounts, cost_model
from .dataset import LabeledDataset, load_idx, stratified_split, subset, synth_dataset, write_idx
from .errors import CheckpointError, ConfigError, ContractViolation, DatasetError, TopsparkError
from .pipeline import LabelAssignment
from .seeding import stream
from .sweep import TECHNIQUES, SweepResult, sweep
from .tradeoff import Constraints, Infeasible, TradeoffWeights, select_best

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INFEASIBLE = 0, 1, 2, 3

LABELS_FORMAT = "topspark-labels"
log = logging.getLogger("topspark")


class UsageError(Exception):
    pass


class InputError(Exception):
    """Unreadable or malformed input file; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="TOML experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--timestep", type=int)
    p.add_argument("--neurons", type=int)
    p.add_argument("--rule", choices=("stdp1", "stdp2"))
    p.add_argument("--technique", choices=TECHNIQUES)
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="topspark", description="Timestep-reduced STDP spiking networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train, label and save a network")
    _common(p)

    p = sub.add_parser("infer", help="classify the test split with a saved network")
    _common(p)
    p.add_argument("--checkpoint", type=Path, help="default: <out>/checkpoint.tspk")
    p.add_argument("--labels", type=Path, help="default: <out>/labels.json")

    p = sub.add_parser("sweep", help="accuracy/latency/energy over a timestep grid")
    _common(p)
    p.add_argument("--grid", help="comma-separated timesteps, overrides sweep.grid")
    p.add_argument("--jobs", type=int, help="parallel worker processes")

    p = sub.add_parser("tradeoff", help="score a sweep and select a design point")
    _common(p)
    p.add_argument("sweep_json", type=Path)
    p.add_argument("--tau", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--min-accuracy", type=float)
    p.add_argument("--max-l-n", type=float)
    p.add_argument("--max-e-n", type=float)
    p.add_argument("--phase", choices=("infer", "train"), help="which phase's costs to score")

    p = sub.add_parser("dataset", help="dataset utilities")
    dsub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = dsub.add_parser("info", help="summarize an IDX image/label pair")
    q.add_argument("images", type=Path)
    q.add_argument("labels", type=Path)
    q = dsub.add_parser("synth", help="write a synthetic dataset as IDX")
    q.add_argument("--classes", type=int, default=10)
    q.add_argument("--per-class", type=int, default=20)
    q.add_argument("--dim", type=int, default=784)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", type=Path, required=True, help="output directory")
    q.add_argument("--prefix", default="synth")
    q.add_argument("--gzip", action="store_true")
    q = dsub.add_parser("subset", help="write a class-stratified subset as IDX")
    q.add_argument("images", type=Path)
    q.add_argument("labels", type=Path)
    q.add_argument("-n", type=int, required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", type=Path, required=True, help="output directory")
    q.add_argument("--prefix", default="subset")
    q.add_argument("--gzip", action="store_true")
    return parser


def _config(args) -> CliConfig:
    overrides = {k: getattr(args, k, None) for k in ("seed", "timestep", "neurons", "rule", "technique", "out")}
    try:
        return load_config(args.config, overrides)
    except FileNotFoundError:
        raise InputError(f"config file not found: {args.config}") from None
    except OSError as exc:
        raise InputError(f"cannot read config {args.config}: {exc.strerror}") from None


def _load(images, labels) -> LabeledDataset:
    for path in (images, labels):
        if not Path(path).is_file():
            raise InputError(f"dataset file not found: {path}")
    try:
        return load_idx(images, labels)
    except OSError as exc:
        raise InputError(f"cannot read {exc.filename}: {exc.strerror}") from None
    except DatasetError as exc:
        raise InputError(str(exc)) from None


def _split_seed(cfg: CliConfig) -> int:
    if cfg.data.split_seed is not None:
        return cfg.data.split_seed
    return int(stream(cfg.seed, "subset").integers(2**32))


def load_splits(cfg: CliConfig) -> tuple[LabeledDataset, LabeledDataset]:
    """Train and test sets per the [data] table."""
    d = cfg.data
    if d.train_images is None:
        raise ConfigError("data.train_images and data.train_labels are not set")
    seed = _split_seed(cfg)
    full = _load(d.train_images, d.train_labels)
    try:
        if d.test_images is None:
            return stratified_split(full, d.n_train, d.n_test, seed)
        test = _load(d.test_images, d.test_labels)
        train = full if d.n_train is None else subset(full, d.n_train, seed)
        test = test if d.n_test is None else subset(test, d.n_test, seed + 1)
        return train, test
    except ContractViolation as exc:
        raise ConfigError(str(exc)) from None


def _write(path: Path, data) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(data, bytes):
            path.write_bytes(data)
        else:
            path.write_text(data)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _report_lines(report) -> str:
    return (
        f"timesteps={report.timesteps} neuron_updates={report.neuron_updates} "
        f"synaptic_events={report.synaptic_events} learning_updates={report.learning_updates}\n"
        f"latency={report.latency:.6g} s energy={report.energy:.6g}"
    )


def cmd_train(args) -> int:
    cfg = _config(args)
    train_set, _ = load_splits(cfg)
    run = cfg.run_config()
    train_counts, label_counts = OpCounts(), OpCounts()
    state = pipeline.train(train_set, run, counts=train_counts)
    labels = pipeline.assign_labels(train_set, run.with_phase("label"), state, counts=label_counts)
    total = train_counts + label_counts
    report = cost_model(total, cfg.cost, run.n_neurons)

    out = Path(cfg.output.dir)
    _write(out / "checkpoint.tspk", checkpoint.to_bytes(state, run.timestep))
    _write(out / "labels.json", _json({
        "format": LABELS_FORMAT,
        "version": 1,
        "n_neurons": run.n_neurons,
        **labels.to_dict(),
    }))
    _write(out / "train_cost.json", _json({
        "phase": "train",
        "timestep": run.timestep,
        "technique": cfg.run.technique,
        "train_set": train_set.name,
        "n_train": len(train_set),
        "counts": {"train": asdict(train_counts), "label": asdict(label_counts)},
        "report": report.to_dict(),
        "neuron": asdict(run.neuron),
    }))
    print(f"trained {run.n_neurons} neurons on {len(train_set)} samples at T={run.timestep} ({cfg.run.technique})")
    print(_report_lines(report))
    print(f"wrote {out / 'checkpoint.tspk'}, {out / 'labels.json'}, {out / 'train_cost.json'}")
    return EXIT_OK


def _read_labels(path: Path) -> LabelAssignment:
    try:
        doc = json.loads(path.read_text())
        if doc.get("format") != LABELS_FORMAT:
            raise ValueError("not a labels document")
        return LabelAssignment.from_dict(doc)
    except FileNotFoundError:
        raise InputError(f"labels file not found: {path}") from None
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise InputError(f"{path}: malformed labels file ({exc})") from None


def cmd_infer(args) -> int:
    cfg = _config(args)
    out = Path(cfg.output.dir)
    ckpt_path = args.checkpoint or out / "checkpoint.tspk"
    labels_path = args.labels or out / "labels.json"
    try:
        ckpt = checkpoint.load(ckpt_path)
    except FileNotFoundError:
        raise InputError(f"checkpoint not found: {ckpt_path}") from None
    except OSError as exc:
        raise InputError(f"cannot read {ckpt_path}: {exc.strerror}") from None
    except CheckpointError as exc:
        raise InputError(str(exc)) from None
    labels = _read_labels(labels_path)
    if labels.label_of_neuron.size != ckpt.n_neurons:
        raise InputError(f"{labels_path} labels {labels.label_of_neuron.size} neurons, checkpoint has {ckpt.n_neurons}")
    if args.neurons is not None and args.neurons != ckpt.n_neurons:
        raise ConfigError(f"--neurons {args.neurons} does not match the checkpoint's {ckpt.n_neurons}")
    timestep = args.timestep if args.timestep is not None else ckpt.timestep
    cfg = replace(cfg, run=replace(cfg.run, n_neurons=ckpt.n_neurons, timestep=timestep))
    try:
        run = cfg.run_config().with_phase("infer")
    except TopsparkError as exc:
        raise ConfigError(str(exc)) from None
    _, test_set = load_splits(cfg)
    if test_set.dim != ckpt.input_dim:
        raise ConfigError(f"test samples have {test_set.dim} inputs, checkpoint expects {ckpt.input_dim}")

    state = ckpt.to_state(run.neuron, cfg.stdp.w_max)
    counts = OpCounts()
    acc = pipeline.evaluate_accuracy(test_set, run, state, labels, counts=counts)
    report = cost_model(counts, cfg.cost, run.n_neurons)
    _write(out / "infer_cost.json", _json({
        "phase": "infer",
        "timestep": run.timestep,
        "technique": cfg.run.technique,
        "test_set": test_set.name,
        "n_test": len(test_set),
        "accuracy": acc,
        "counts": asdict(counts),
        "report": report.to_dict(),
    }))
    print(f"accuracy {acc:.4f} on {len(test_set)} samples at T={run.timestep} ({cfg.run.technique})")
    print(_report_lines(report))
    return EXIT_OK


def _parse_grid(text: str) -> list[int]:
    try:
        grid = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--grid expects comma-separated integers, got {text!r}") from None
    if not grid:
        raise UsageError("--grid is empty")
    return grid


def cmd_sweep(args) -> int:
    cfg = _config(args)
    grid = _parse_grid(args.grid) if args.grid else list(cfg.sweep.grid)
    if any(t < 1 or t > cfg.run.t0 for t in grid):
        raise ConfigError(f"grid entries must lie in [1, {cfg.run.t0}], got {grid}")
    jobs = cfg.sweep.jobs if args.jobs is None else args.jobs
    if jobs < 1:
        raise UsageError("--jobs must be >= 1")
    techniques = [args.technique] if args.technique else list(cfg.sweep.techniques)
    train_set, test_set = load_splits(cfg)
    # sweeps always start from the base parameters at t0
    base = cfg.run_config(timestep=cfg.run.t0, technique="direct")
    result = sweep(
        train_set, test_set, base, grid, techniques,
        weights=cfg.tradeoff.weights, t0=cfg.run.t0, cost_table=cfg.cost, jobs=jobs,
    )
    result.meta["neuron"] = asdict(cfg.neuron)
    out = Path(cfg.output.dir)
    _write(out / "sweep.csv", result.to_csv())
    _write(out / "sweep.json", result.to_json())
    print(result.table())
    print(f"wrote {out / 'sweep.csv'}, {out / 'sweep.json'}")
    return EXIT_OK


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def chosen_fragment(rec, result: SweepResult) -> str:
    """Config fragment that reproduces ``rec`` when merged into a config file."""
    lines = [
        f"# technique={rec.technique} t1={rec.t1} accuracy={rec.accuracy!r} "
        f"l_n={rec.l_n!r} e_n={rec.e_n!r} score={rec.score!r}",
        "# effective neuron parameters: "
        + ", ".join(f"{k}={_toml_value(v)}" for k, v in sorted(rec.params.items())),
        "[run]",
        f"timestep = {rec.t1}",
        f"t0 = {result.t0}",
        f"technique = {_toml_value(rec.technique)}",
    ]
    base = result.meta.get("neuron")
    if base:
        lines.append("")
        lines.append("[neuron]")
        lines.extend(f"{k} = {_toml_value(v)}" for k, v in base.items())
    return "\n".join(lines) + "\n"


def cmd_tradeoff(args) -> int:
    cfg = _config(args)
    t = cfg.tradeoff
    try:
        weights = TradeoffWeights(
            t.tau if args.tau is None else args.tau,
            t.epsilon if args.epsilon is None else args.epsilon,
        )
    except TopsparkError as exc:
        raise ConfigError(str(exc)) from None
    constraints = Constraints(
        t.min_accuracy if args.min_accuracy is None else args.min_accuracy,
        t.max_l_n if args.max_l_n is None else args.max_l_n,
        t.max_e_n if args.max_e_n is None else args.max_e_n,
    )
    phase = args.phase or t.phase
    try:
        result = SweepResult.from_json(args.sweep_json.read_text())
    except FileNotFoundError:
        raise InputError(f"sweep file not found: {args.sweep_json}") from None
    except OSError as exc:
        raise InputError(f"cannot read {args.sweep_json}: {exc.strerror}") from None
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise InputError(f"{args.sweep_json}: malformed sweep JSON ({exc})") from None
    if not result.records:
        raise InputError(f"{args.sweep_json}: sweep has no records")
    scored = result.rescored(weights, phase)
    print(f"tau={weights.tau!r} epsilon={weights.epsilon!r} phase={phase}")
    print(scored.table())
    choice = select_best(scored.records, constraints)
    if isinstance(choice, Infeasible):
        m = choice.nearest_miss
        print(
            f"infeasible: no record meets {constraints}; nearest miss {m.technique} t1={m.t1} "
            f"(violation {choice.violation:.4g})",
            file=sys.stderr,
        )
        return EXIT_INFEASIBLE
    print(f"chosen: {choice.technique} t1={choice.t1} accuracy={choice.accuracy:.4f} score={choice.score:.6g}")
    path = Path(cfg.output.dir) / "chosen.toml"
    _write(path, chosen_fragment(choice, scored))
    print(f"wrote {path}")
    return EXIT_OK


def _write_idx_pair(ds: LabeledDataset, out: Path, prefix: str, gz: bool) -> tuple[Path, Path]:
    ext = ".gz" if gz else ""
    images = out / f"{prefix}-images-idx3-ubyte{ext}"
    labels = out / f"{prefix}-labels-idx1-ubyte{ext}"
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_idx(ds, images, labels)
    except OSError as exc:
        raise InputError(f"cannot write {exc.filename or out}: {exc.strerror}") from None
    return images, labels


def cmd_dataset(args) -> int:
    if args.action == "info":
        ds = _load(args.images, args.labels)
        counts = np.bincount(ds.labels, minlength=10)
        print(f"{ds.name}: {len(ds)} samples, {ds.dim} inputs")
        print("per class: " + " ".join(f"{c}:{n}" for c, n in enumerate(counts)))
        if len(ds):
            print(f"mean intensity {ds.images.mean():.3f}")
        return EXIT_OK
    if args.action == "synth":
        try:
            ds = synth_dataset(args.classes, args.per_class, args.dim, args.seed)
        except ContractViolation as exc:
            raise ConfigError(str(exc)) from None
    else:
        full = _load(args.images, args.labels)
        try:
            ds = subset(full, args.n, args.seed)
        except ContractViolation as exc:
            raise ConfigError(str(exc)) from None
    images, labels = _write_idx_pair(ds, args.out, args.prefix, args.gzip)
    print(f"wrote {len(ds)} samples to {images} and {labels}")
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "infer": cmd_infer,
    "sweep": cmd_sweep,
    "tradeoff": cmd_tradeoff,
    "dataset": cmd_dataset,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, ContractViolation) as exc:
        print(f"topspark: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"topspark: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
