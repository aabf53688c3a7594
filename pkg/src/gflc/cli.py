"""``gflc`` command line: synth, inject-noise, split, correct, evaluate, sweep.

Exit status is 0 on success, 2 for usage/config errors and 1 for domain
errors raised by the library.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from gflc import __version__
from gflc.config import CONFIG_SCHEMA_VERSION, PipelineConfig
from gflc.correction import gflc_correct
from gflc.dataset import (
    NoiseRecord,
    Schema,
    generate_synthetic,
    inject_group_noise,
    load_csv,
    load_noise_record,
    read_csv_rows,
    shuffle_sensitive_iid,
    split,
    write_dataset_csv,
)
from gflc.errors import ConfigError, GFLCError, SchemaError
from gflc.evaluation import evaluate_correction, threshold_sweep, write_sweep_csv

log = logging.getLogger("gflc")


def _ranged(kind, lo=None, hi=None, lo_open=False, hi_open=False):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}")
        if lo is not None and (value < lo or (lo_open and value == lo)):
            raise argparse.ArgumentTypeError(f"{value} is out of range")
        if hi is not None and (value > hi or (hi_open and value == hi)):
            raise argparse.ArgumentTypeError(f"{value} is out of range")
        return value

    return parse


unit = _ranged(float, 0.0, 1.0)
open_unit = _ranged(float, 0.0, 1.0, lo_open=True, hi_open=True)
positive_int = _ranged(int, 1)
nonneg_int = _ranged(int, 0)
positive_float = _ranged(float, 0.0, lo_open=True)
nonneg_float = _ranged(float, 0.0)

# CLI flag -> (PipelineConfig field, parser)
CONFIG_FLAGS = {
    "k": ("k", positive_int),
    "alpha": ("alpha", nonneg_float),
    "beta": ("beta", nonneg_float),
    "gamma": ("gamma", nonneg_float),
    "eta": ("eta", positive_float),
    "ricci-iterations": ("ricci_iterations", nonneg_int),
    "disparity-tolerance": ("disparity_tolerance", unit),
    "eps-floor": ("eps_floor", positive_float),
    "trees": ("tree_count", positive_int),
    "max-depth": ("max_depth", positive_int),
    "fpr-penalty": ("fpr_penalty", nonneg_float),
    "symmetrize": ("symmetrize", str),
    "grid-start": ("threshold_start", float),
    "grid-stop": ("threshold_stop", float),
    "grid-step": ("threshold_step", positive_float),
    "seed": ("seed", int),
    "threads": ("threads", positive_int),
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config (or a diagnostics.json to replay)")
    for flag, (dest, kind) in CONFIG_FLAGS.items():
        p.add_argument(f"--{flag}", dest=dest, type=kind, default=None)
    p.add_argument("--group-as-feature", dest="group_as_feature", action="store_true", default=None)


def resolve_config(args) -> PipelineConfig:
    """Defaults, then the config file, then explicit flags."""
    base = PipelineConfig.from_json(args.config).to_dict() if getattr(args, "config", None) else {}
    for dest, _ in CONFIG_FLAGS.values():
        value = getattr(args, dest, None)
        if value is not None:
            base[dest] = value
    if getattr(args, "group_as_feature", None):
        base["group_as_feature"] = True
    return PipelineConfig.from_dict(base)


def _schema(args) -> Schema:
    features = args.features.split(",") if getattr(args, "features", None) else None
    return Schema(features=features, label=args.label_column, group=args.group_column)


def _add_schema_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--features", help="comma-separated feature columns (default: all numeric)")
    p.add_argument("--label-column", default="label")
    p.add_argument("--group-column", default="group")


# ----------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> None:
    ds = generate_synthetic(args.n, args.d, args.class_separation, args.group_fraction, args.positive_rate, args.seed)
    write_dataset_csv(args.out, ds)


def cmd_inject_noise(args) -> None:
    ds = load_csv(args.input, _schema(args))
    if args.shuffle_groups:
        ds = shuffle_sensitive_iid(ds, args.seed)
    record = inject_group_noise(ds, args.group, args.rate, args.seed)
    record.to_csv(args.out)
    log.info("flipped %d labels in group %s", record.flip_mask.sum(), args.group)


def cmd_split(args) -> None:
    ds = load_csv(args.input, _schema(args))
    parts = split(ds, tuple(args.fractions), args.seed)
    header, rows = read_csv_rows(args.input)
    position = {i: row for i, row in enumerate(rows)}
    id_to_pos = {str(v): i for i, v in enumerate(ds.ids.tolist())}
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, part in zip(("train", "validation", "test"), parts):
        with open(args.out_dir / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for ident in part.ids.tolist():
                w.writerow(position[id_to_pos[str(ident)]])


def _read_probabilities(path, ids) -> np.ndarray:
    header, rows = read_csv_rows(path)
    for name in ("id", "probability"):
        if name not in header:
            raise SchemaError(f"{path}: missing column {name!r}")
    i_id, i_p = header.index("id"), header.index("probability")
    lookup = {r[i_id]: float(r[i_p]) for r in rows}
    missing = [str(i) for i in ids if str(i) not in lookup]
    if missing:
        raise SchemaError(f"{path}: no probability for id {missing[0]!r}")
    return np.array([lookup[str(i)] for i in ids])


def cmd_correct(args) -> None:
    config = resolve_config(args)
    ds = load_csv(args.input, _schema(args))
    probs = _read_probabilities(args.probabilities, ds.ids.tolist()) if args.probabilities else None
    result = gflc_correct(ds, config, probabilities=probs)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    result.write_corrected_csv(out / "corrected.csv", args.input)
    result.write_diagnostics(out / "diagnostics.json")
    result.scores.to_csv(out / "scores.csv", ds.ids.tolist(), ds.labels, ds.groups, ds.group_names)
    if args.dump_graph:
        result.graph.write_edge_list(out / "graph.txt")
        for c in result.curvatures:
            (out / f"curvature_{c.iteration}.txt").write_text(c.to_text(result.graph))
    d = result.diagnostics
    log.info("dp ratio %.4f -> %.4f, %d flips", d["dp_before"], d["dp_after"], len(result.flips))


def _corrected_labels(path, n) -> np.ndarray:
    header, rows = read_csv_rows(path)
    if "corrected_label" not in header:
        raise SchemaError(f"{path}: missing column 'corrected_label'")
    j = header.index("corrected_label")
    labels = np.array([int(float(r[j])) for r in rows])
    if len(labels) != n:
        raise SchemaError(f"{path}: {len(labels)} rows, expected {n}")
    return labels


def cmd_evaluate(args) -> None:
    config = resolve_config(args)
    schema = _schema(args)
    header, _ = read_csv_rows(args.noisy)
    if "clean_label" in header and "flipped" in header:
        record = load_noise_record(args.noisy, schema)
    else:
        ds = load_csv(args.noisy, schema)
        record = NoiseRecord(ds, ds.labels, np.zeros(ds.n, bool), 0.0, int(ds.groups[0]))
    labels = _corrected_labels(args.corrected, record.base.n)
    test = load_csv(args.test, Schema(features=list(record.base.feature_names), label=args.label_column, group=args.group_column))
    test = test.regroup(record.base.group_names)
    report = evaluate_correction(record, labels, test, config)
    report.write(args.out_dir)
    log.info("AUC noisy %.4f, corrected %.4f", report.auc_noisy, report.auc_corrected)


def cmd_sweep(args) -> None:
    config = resolve_config(args)
    ds = load_csv(args.labels, _schema(args))
    probs = _read_probabilities(args.probabilities, ds.ids.tolist())
    rows = threshold_sweep(probs, ds.labels, ds.groups, config.threshold_grid())
    write_sweep_csv(args.out, rows)


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gflc", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--version", action="version", version=f"gflc {__version__} (config schema {CONFIG_SCHEMA_VERSION})"
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic two-cluster dataset")
    p.add_argument("--n", type=_ranged(int, 4), default=2000)
    p.add_argument("--d", type=positive_int, default=4)
    p.add_argument("--class-separation", type=float, default=2.0)
    p.add_argument("--group-fraction", type=open_unit, default=0.5)
    p.add_argument("--positive-rate", type=open_unit, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("inject-noise", help="flip labels inside one group")
    p.add_argument("input", type=Path)
    p.add_argument("--group", required=True, help="group name as it appears in the CSV")
    p.add_argument("--rate", type=unit, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shuffle-groups", action="store_true", help="IID-shuffle the group column first")
    p.add_argument("--out", type=Path, required=True)
    _add_schema_flags(p)
    p.set_defaults(func=cmd_inject_noise)

    p = sub.add_parser("split", help="train/validation/test split of a CSV")
    p.add_argument("input", type=Path)
    p.add_argument("--fractions", type=open_unit, nargs=3, default=[0.8, 0.1, 0.1])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", type=Path, required=True)
    _add_schema_flags(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("correct", help="run label correction")
    p.add_argument("input", type=Path)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--probabilities", type=Path, help="CSV id,probability to use instead of the forest")
    p.add_argument("--dump-graph", action="store_true", help="also write graph.txt and curvature_<t>.txt")
    _add_schema_flags(p)
    _add_config_flags(p)
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("evaluate", help="compare models trained on noisy vs corrected labels")
    p.add_argument("--noisy", type=Path, required=True)
    p.add_argument("--corrected", type=Path, required=True)
    p.add_argument("--test", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    _add_schema_flags(p)
    _add_config_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="threshold report for given probabilities")
    p.add_argument("--probabilities", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True, help="dataset CSV with label and group columns")
    p.add_argument("--out", type=Path, required=True)
    _add_schema_flags(p)
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"gflc: usage error: {exc}", file=sys.stderr)
        return 2
    except (GFLCError, FileNotFoundError) as exc:
        print(f"gflc: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
