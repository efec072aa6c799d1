#!/usr/bin/env python3
"""
Test suite for the training pipeline (LangGraph DAG) and its nodes.
"""

import csv
import os
import sys

import numpy as np
import pytest

# Add the project root to Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from app.app import STAGES, TrainingPipeline
from app.config import RunConfig
from app.data.criteo import write_criteo_file
from app.data.synthetic import SyntheticSpec, generate_synthetic
from app.errors import ConfigError, DataError
from app.nodes.ingest import ingest_node
from app.nodes.output import METRICS_COLUMNS
from app.nodes.validate import validate_node
from app.persistence.checkpoint import load_checkpoint
from app.schemas.dataset import DatasetSchema

SCHEMA = DatasetSchema.uniform(2, 3, 10)


def write_synthetic(path, n=600, seed=5):
    spec = SyntheticSpec.random(SCHEMA, k_true=2, latent_scale=0.8, bias=0.0, seed=seed, n=n)
    examples, _ = generate_synthetic(spec)
    write_criteo_file(path, examples)
    return examples


def run_config(tmp_path, **overrides):
    flags = {
        "train": str(tmp_path / "train.tsv"),
        "schema_dense": 2, "schema_cats": 3, "buckets": 10,
        "dim": 4, "epochs": 2, "batch": 64, "lr": 0.01,
        "out": str(tmp_path / "model.secn"),
    }
    flags.update(overrides)
    return RunConfig.load(flags, environ={})


class TestNodes:
    """Individual stages."""

    def test_validate_node_builds_configs(self, tmp_path):
        write_synthetic(tmp_path / "train.tsv")
        state = validate_node({"run_config": run_config(tmp_path), "error": None})
        assert state["error"] is None
        assert state["schema"] == SCHEMA
        assert state["model_config"].embed_dim == 4
        assert state["train_config"].epochs == 2

    def test_validate_node_records_error(self, tmp_path):
        state = validate_node({"run_config": run_config(tmp_path), "error": None})
        assert isinstance(state["error"], ConfigError), "missing train file should fail validation"

    def test_ingest_node_reports_rejects(self, tmp_path):
        write_synthetic(tmp_path / "train.tsv", n=50)
        with open(tmp_path / "train.tsv", "a") as f:
            f.write("7\t\t\t\t\t\n")
        state = ingest_node({"run_config": run_config(tmp_path), "schema": SCHEMA, "error": None})
        assert len(state["raw_train"]) == 50
        assert [e.line_number for e in state["rejects"]] == [51]
        assert state["raw_valid"] is None


class TestTrainingPipeline:
    """End-to-end DAG runs."""

    def test_full_run_writes_checkpoint_and_table(self, tmp_path):
        write_synthetic(tmp_path / "train.tsv")
        result = TrainingPipeline().run(run_config(tmp_path))
        assert result["error"] is None
        assert len(result["train"]) == 480 and len(result["valid"]) == 120

        checkpoint = load_checkpoint(tmp_path / "model.secn")
        assert checkpoint.checksum == result["checksum"]
        assert checkpoint.params.equals(result["params"])

        with open(tmp_path / "model.metrics.csv") as f:
            rows = list(csv.reader(f))
        print(f"Metrics table: {rows}")
        assert tuple(rows[0]) == METRICS_COLUMNS
        assert len(rows) == 1 + len(result["report"].epochs) == 3

    def test_same_seed_byte_identical_checkpoints(self, tmp_path):
        write_synthetic(tmp_path / "train.tsv")
        TrainingPipeline().run(run_config(tmp_path, out=str(tmp_path / "a.secn")))
        TrainingPipeline().run(run_config(tmp_path, out=str(tmp_path / "b.secn")))
        assert (tmp_path / "a.secn").read_bytes() == (tmp_path / "b.secn").read_bytes()

    def test_separate_validation_file(self, tmp_path):
        write_synthetic(tmp_path / "train.tsv", n=400, seed=1)
        write_synthetic(tmp_path / "valid.tsv", n=100, seed=2)
        result = TrainingPipeline().run(run_config(tmp_path, valid=str(tmp_path / "valid.tsv")))
        assert len(result["train"]) == 400 and len(result["valid"]) == 100
        assert np.allclose(result["train"].dense.mean(axis=0), 0.0, atol=1e-12)

    def test_partial_pipeline_stops_before_training(self, tmp_path):
        write_synthetic(tmp_path / "train.tsv")
        result = TrainingPipeline(stages=STAGES[:3]).run(run_config(tmp_path))
        assert result["params"] is None
        assert result["stats"] is not None
        assert not (tmp_path / "model.secn").exists()

    def test_errors_are_raised_with_their_type(self, tmp_path):
        with pytest.raises(ConfigError):
            TrainingPipeline().run(run_config(tmp_path))
        (tmp_path / "train.tsv").write_text("not\ta\tcriteo\tline\n")
        with pytest.raises(DataError):
            TrainingPipeline().run(run_config(tmp_path))
        assert not (tmp_path / "model.secn").exists()
