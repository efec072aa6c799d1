#!/usr/bin/env python3
"""
Test suite for run configuration layering and validation.
"""

import os
import sys

import pytest

# Add the project root to Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from app.config import RunConfig
from app.errors import ConfigError
from app.schemas.model_config import ModelKind, OptimizerKind


class TestRunConfig:
    """defaults < config file < SECN_* environment < flags."""

    def test_defaults(self):
        config = RunConfig.load({}, environ={})
        assert config.dim == 8
        assert config.layers == 2
        assert config.separated is True
        assert config.seed == 42
        train = config.train_config()
        assert train.optimizer is OptimizerKind.ADAM
        assert train.learning_rate == 1e-3
        assert train.batch_size == 256
        assert train.epochs == 10
        assert train.l2 == 1e-6
        assert train.early_stop_patience == 2

    def test_precedence(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("# experiment\ndim = 16\nlayers = 3\nlr = 0.01\nseparated = false\n")
        environ = {"SECN_LAYERS": "4", "SECN_LR": "0.02", "UNRELATED": "x"}
        config = RunConfig.load({"lr": 0.05, "dim": None}, config_file=str(path), environ=environ)
        assert config.dim == 16, "file value when neither env nor flag sets it"
        assert config.layers == 4, "env overrides file"
        assert config.lr == 0.05, "flag overrides env"
        assert config.separated is False

    def test_unknown_key_in_file(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("depth = 3\n")
        with pytest.raises(ConfigError):
            RunConfig.load({}, config_file=str(path), environ={})

    def test_bad_values(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.load({}, environ={"SECN_DIM": "eight"})
        with pytest.raises(ConfigError):
            RunConfig.load({}, environ={"SECN_SEPARATED": "maybe"})
        with pytest.raises(ConfigError):
            RunConfig.load({}, config_file=str(tmp_path / "missing.conf"), environ={})

    def test_model_config_translation(self):
        config = RunConfig.load({"model": "fm", "schema_dense": 0, "schema_cats": 4, "buckets": 50, "dim": 5},
                                environ={})
        model = config.model_config()
        assert model.kind is ModelKind.FM
        assert model.dataset.buckets_per_field == [50] * 4
        assert model.embed_dim == 5

    def test_invalid_settings_raise_config_error(self):
        with pytest.raises(ConfigError):
            RunConfig.load({"activation": "sigmoid"}, environ={}).model_config()
        with pytest.raises(ConfigError):
            RunConfig.load({"batch": 0}, environ={}).train_config()
        with pytest.raises(ConfigError):
            RunConfig.load({"buckets": 1}, environ={}).dataset_schema()

    def test_validate_for_training(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.load({}, environ={}).validate_for_training()
        with pytest.raises(ConfigError):
            RunConfig.load({"train": str(tmp_path / "absent.tsv")}, environ={}).validate_for_training()
        data = tmp_path / "train.tsv"
        data.write_text("")
        with pytest.raises(ConfigError):
            RunConfig.load({"train": str(data), "valid_frac": 1.5}, environ={}).validate_for_training()
        ok = RunConfig.load({"train": str(data), "out": str(tmp_path / "out" / "m.secn")}, environ={})
        ok.validate_for_training()
        assert ok.metrics_path() == tmp_path / "out" / "m.metrics.csv"
