#!/usr/bin/env python3
"""
Command-line interface.

Usage:
    python -m app.main train --train data/train.tsv --out model.secn [--valid-frac 0.2] ...
    python -m app.main eval --checkpoint model.secn --train data/test.tsv [--split valid] [--metrics-out m.json]
    python -m app.main gradcheck --model sepcross [--no-separated] [--seed 0]
    python -m app.main synth --n 100000 --schema-cats 6 --buckets 20 --out synth.tsv
    python -m app.main inspect --checkpoint model.secn
    python -m app.main compare --train data/train.tsv --seeds 1 2 3 --metrics-out compare.csv

Exit status: 0 success, 1 usage/config error, 2 data error, 3 numeric failure.
"""

import argparse
import csv
import json
import logging
import os
import sys
import traceback
from pathlib import Path
from typing import List, Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from app.app import TrainingPipeline
from app.config import RunConfig, require_writable
from app.core.rng import SeededRng
from app.data.batching import SPLIT_STREAM, split_indices
from app.data.criteo import load_criteo, write_criteo_file
from app.data.examples import ExampleSet
from app.data.synthetic import SyntheticSpec, generate_synthetic
from app.errors import ConfigError, DataError, NumericError, SchemaMismatchError, SecnError
from app.metrics.metrics import auc, evaluate
from app.models.registry import build_model
from app.persistence.checkpoint import Checkpoint, load_checkpoint, summarize_checkpoint
from app.schemas.dataset import DatasetSchema
from app.schemas.model_config import ModelKind
from app.training.gradcheck import grad_check, small_config
from app.training.trainer import fit

load_dotenv()
logger = logging.getLogger(__name__)

EXIT_OK = 0
CHECKPOINT_HELP = "Checkpoint file; its checksum is verified on load, which takes about 0.2 s per MB"


def setup_logging(verbose: bool = False):
    """Configure logging for the CLI."""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(sys.stderr)
        ],
        force=True,
    )


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1, like every other config error."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _add_schema_flags(p: argparse.ArgumentParser):
    p.add_argument("--schema-dense", type=int, help="Number of dense (integer) columns")
    p.add_argument("--schema-cats", type=int, help="Number of categorical fields")
    p.add_argument("--buckets", type=int, help="Hash buckets per categorical field")


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="Optional `key = value` config file (flags override it)")
    p.add_argument("--train", help="Training data (Criteo TSV)")
    p.add_argument("--valid", help="Validation data (Criteo TSV); otherwise split --train")
    p.add_argument("--valid-frac", type=float, help="Held-out fraction when --valid is absent")
    _add_schema_flags(p)
    p.add_argument("--model", choices=[k.value for k in ModelKind])
    p.add_argument("--dim", type=int, help="Embedding dimension d (FM latent size k)")
    p.add_argument("--layers", type=int, help="Cross layers L")
    p.add_argument("--separated", action=argparse.BooleanOptionalAction, default=None,
                   help="Per-embedding-dimension cross matrices")
    p.add_argument("--activation", choices=["identity", "relu"])
    p.add_argument("--dense-field", action=argparse.BooleanOptionalAction, default=None,
                   help="Feed dense features as one projected field row")
    p.add_argument("--optimizer", choices=["sgd", "adam"])
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--l2", type=float)
    p.add_argument("--patience", type=int, help="Early-stopping patience (0 disables)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="Checkpoint output path")
    p.add_argument("--metrics-out", help="Metrics table output path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(description="Separation-embedding cross network CTR toolkit")
    parser.add_argument("--verbose", action="store_true", help="Enable verbose logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="Train a model and write a checkpoint + metrics table")
    _add_run_flags(p)

    p = sub.add_parser("compare", help="Train sepcross and fm under identical budgets for several seeds")
    _add_run_flags(p)
    p.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--models", nargs="+", choices=[k.value for k in ModelKind], default=["sepcross", "fm"])

    p = sub.add_parser("eval", help="Evaluate a checkpoint on a data file")
    p.add_argument("--checkpoint", required=True, help=CHECKPOINT_HELP)
    p.add_argument("--train", "--data", dest="data", required=True, help="Data file to evaluate")
    p.add_argument("--split", choices=["all", "train", "valid"], default="all",
                   help="Score the whole file, or one side of the seeded split the checkpoint was trained on")
    _add_schema_flags(p)
    p.add_argument("--metrics-out", help="Write the metrics as JSON")

    p = sub.add_parser("gradcheck", help="Finite-difference check of the analytic gradients")
    p.add_argument("--model", choices=[k.value for k in ModelKind], default="sepcross")
    p.add_argument("--separated", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("synth", help="Generate a synthetic Criteo-format dataset with planted interactions")
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--schema-dense", type=int, default=0)
    p.add_argument("--schema-cats", type=int, default=6)
    p.add_argument("--buckets", type=int, default=20)
    p.add_argument("--k-true", type=int, default=4)
    p.add_argument("--latent-scale", type=float, default=0.5)
    p.add_argument("--bias", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)

    p = sub.add_parser("inspect", help="Summarise a checkpoint's structure")
    p.add_argument("--checkpoint", required=True, help=CHECKPOINT_HELP)
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    return RunConfig.load(flags, config_file=args.config)


def cmd_train(args: argparse.Namespace) -> int:
    run_config = _run_config(args)
    result = TrainingPipeline().run(run_config)
    report = result["report"]
    best = report.best
    print(f"checkpoint: {run_config.out} (checksum {result['checksum']:016x})")
    print(f"metrics: {run_config.metrics_path()}")
    print(f"best epoch {best.epoch}: train logloss {best.train_logloss:.6f}, "
          f"valid logloss {best.valid_logloss:.6f}, valid AUC {_fmt(best.valid_auc)}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    run_config = _run_config(args)
    prepared = TrainingPipeline(stages=("validate", "ingest", "preprocess")).run(run_config)
    rows = []
    for seed in args.seeds:
        train_config = prepared["train_config"].model_copy(update={"seed": seed})
        for kind in args.models:
            model_config = prepared["model_config"].model_copy(update={"kind": ModelKind(kind)})
            _, report = fit(model_config, train_config, prepared["train"], prepared["valid"])
            best = report.best
            rows.append((seed, kind, best.valid_logloss, best.valid_auc))
            print(f"seed {seed} {kind}: valid logloss {best.valid_logloss:.6f}, valid AUC {_fmt(best.valid_auc)}")

    path = Path(run_config.metrics_out or Path(run_config.out).with_suffix(".compare.csv"))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("seed", "model", "valid_logloss", "valid_auc"))
        writer.writerows(rows)
    print(f"comparison: {path}")
    return EXIT_OK


def _check_column_count(path: str, schema: DatasetSchema) -> None:
    expected = 1 + schema.num_dense + schema.num_categorical
    try:
        with open(path, "rb") as f:
            first = f.readline()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    found = len(first.rstrip(b"\r\n").split(b"\t"))
    if first and found != expected:
        raise SchemaMismatchError(
            f"data has {found} columns per line but the checkpoint schema "
            f"({schema.describe()}) expects {expected}"
        )


def _select_split(examples: ExampleSet, checkpoint: Checkpoint, split: str) -> ExampleSet:
    """Rebuild one side of the seeded in-file split recorded in the checkpoint."""
    if split == "all":
        return examples
    if checkpoint.valid_frac is None:
        raise ConfigError(f"--split {split} needs a checkpoint trained on an in-file split, "
                          "but this one was trained with a separate --valid file")
    rng = SeededRng(checkpoint.seed).derive(SPLIT_STREAM)
    train_idx, valid_idx = split_indices(len(examples), checkpoint.valid_frac, rng)
    return examples.subset(train_idx if split == "train" else valid_idx)


def cmd_eval(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    schema = checkpoint.model_config.dataset
    if any(v is not None for v in (args.schema_dense, args.schema_cats, args.buckets)):
        buckets = schema.buckets_per_field[0] if schema.buckets_per_field else 2
        try:
            requested = DatasetSchema.uniform(
                schema.num_dense if args.schema_dense is None else args.schema_dense,
                schema.num_categorical if args.schema_cats is None else args.schema_cats,
                buckets if args.buckets is None else args.buckets,
            )
        except ValidationError as e:
            raise ConfigError(f"invalid schema: {e.errors()[0].get('msg')}") from e
        schema.require_same(requested)
    _check_column_count(args.data, schema)

    examples, _ = load_criteo(args.data, schema)
    examples = _select_split(examples, checkpoint, args.split)
    examples = examples.with_dense(checkpoint.stats.apply(examples.dense))
    metrics = evaluate(build_model(checkpoint.model_config), checkpoint.params, examples)

    print(f"logloss: {metrics.logloss:.9f}")
    print(f"auc: {_fmt(metrics.auc)}")
    print(f"n: {metrics.n}")
    print(f"n_pos: {metrics.n_pos}")
    if args.metrics_out:
        out = Path(args.metrics_out)
        require_writable(out)
        out.write_text(json.dumps(metrics.model_dump(), indent=2) + "\n")
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    kind = ModelKind(args.model)
    report = grad_check(kind, small_config(kind, separated=args.separated), seed=args.seed)
    print(f"{'group':<12} {'max rel error':>14}")
    for group, err in sorted(report.max_errors.items()):
        status = "ok" if err < report.tolerance else "FAIL"
        print(f"{group:<12} {err:>14.3e}  {status}")
    print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else NumericError.exit_code


def cmd_synth(args: argparse.Namespace) -> int:
    try:
        schema = DatasetSchema.uniform(args.schema_dense, args.schema_cats, args.buckets)
        spec = SyntheticSpec.random(schema, k_true=args.k_true, latent_scale=args.latent_scale,
                                    bias=args.bias, seed=args.seed, n=args.n)
    except ValidationError as e:
        raise ConfigError(f"invalid synthetic settings: {e.errors()[0].get('msg')}") from e
    examples, logits = generate_synthetic(spec)
    try:
        bayes_auc = auc(logits, examples.labels)
    except ValueError:
        bayes_auc = None

    out = Path(args.out)
    require_writable(out)
    write_criteo_file(out, examples)
    sidecar = out.with_name(out.name + ".meta.json")
    sidecar.write_text(json.dumps({
        "seed": args.seed,
        "n": args.n,
        "schema": schema.model_dump(),
        "k_true": args.k_true,
        "latent_scale": args.latent_scale,
        "bias": args.bias,
        "positives": examples.n_pos,
        "bayes_auc": bayes_auc,
    }, indent=2) + "\n")
    print(f"dataset: {out} ({args.n} rows, {examples.n_pos} positives)")
    print(f"bayes AUC: {_fmt(bayes_auc)} (sidecar {sidecar})")
    return EXIT_OK


def cmd_inspect(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    summary = summarize_checkpoint(checkpoint)
    expected = build_model(checkpoint.model_config).parameter_count()
    for key in ("kind", "version", "schema", "k", "embed_dim", "num_fields", "cross_layers",
                "separated", "activation", "seed", "checksum"):
        if key in summary:
            print(f"{key}: {summary[key]}")
    print(f"parameter_count: {summary['parameter_count']} (closed form {expected})")
    for name, shape in summary["shapes"].items():
        print(f"  {name}: {'x'.join(str(s) for s in shape)}")
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "compare": cmd_compare,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "synth": cmd_synth,
    "inspect": cmd_inspect,
}


def _fmt(value: Optional[float]) -> str:
    return "undefined" if value is None else f"{value:.6f}"


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    setup_logging(args.verbose)

    try:
        return COMMANDS[args.command](args)
    except SecnError as e:
        error_msg = str(e).splitlines()[0] if str(e) else type(e).__name__
        if os.getenv("DEBUG", "false").lower() == "true":
            traceback.print_exc()
        print(f"error: {error_msg}", file=sys.stderr)
        return e.exit_code
    except (ValueError, OSError) as e:
        if os.getenv("DEBUG", "false").lower() == "true":
            traceback.print_exc()
        print(f"error: {str(e).splitlines()[0] if str(e) else type(e).__name__}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
