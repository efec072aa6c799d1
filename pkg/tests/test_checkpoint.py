#!/usr/bin/env python3
"""
Test suite for the binary checkpoint codec.
"""

import logging
import os
import sys

import numpy as np
import pytest

# Add the project root to Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from app.core.rng import SeededRng
from app.data.hashing import fnv1a64
from app.errors import CheckpointError
from app.models.registry import build_model
from app.persistence.checkpoint import (MAGIC, Checkpoint, checkpoint_checksum, decode_checkpoint, encode_checkpoint,
                                        load_checkpoint, save_checkpoint, summarize_checkpoint)
from app.schemas.dataset import DatasetSchema, DenseStats
from app.schemas.model_config import ModelConfig, ModelKind


def make_checkpoint(kind=ModelKind.SEPCROSS, separated=True, seed=3):
    config = ModelConfig(kind=kind, dataset=DatasetSchema.uniform(2, 3, 10), embed_dim=3,
                         cross_layers=2, separated=separated)
    params = build_model(config).init_params(SeededRng(seed))
    stats = DenseStats(mean=[0.5, -1.25], std=[2.0, 0.0])
    return Checkpoint(model_config=config, stats=stats, params=params, seed=seed)


class TestCheckpoint:
    """Round trip, determinism and integrity checks."""

    @pytest.mark.parametrize("kind", list(ModelKind))
    def test_round_trip_is_bit_exact(self, tmp_path, kind):
        original = make_checkpoint(kind)
        path = tmp_path / "model.secn"
        checksum = save_checkpoint(path, original)
        loaded = load_checkpoint(path)
        assert loaded.checksum == checksum
        assert loaded.model_config == original.model_config
        assert loaded.stats == original.stats
        assert loaded.seed == original.seed
        assert loaded.params.equals(original.params)
        assert encode_checkpoint(loaded) == path.read_bytes()

    def test_encoding_is_deterministic(self):
        assert encode_checkpoint(make_checkpoint()) == encode_checkpoint(make_checkpoint())
        assert encode_checkpoint(make_checkpoint(seed=3)) != encode_checkpoint(make_checkpoint(seed=4))

    def test_layout_starts_with_magic(self):
        payload = encode_checkpoint(make_checkpoint())
        assert payload[:4] == MAGIC
        assert int.from_bytes(payload[4:8], "little") == 1

    def test_any_single_byte_change_is_detected(self):
        payload = encode_checkpoint(make_checkpoint())
        positions = list(range(0, len(payload), 37)) + [len(payload) - 1]
        for pos in positions:
            tampered = bytearray(payload)
            tampered[pos] ^= 0x01
            with pytest.raises(CheckpointError):
                decode_checkpoint(bytes(tampered))
        print(f"Checked {len(positions)} tampered positions in a {len(payload)}-byte checkpoint")

    def test_truncated_file(self, tmp_path):
        payload = encode_checkpoint(make_checkpoint())
        for cut in (0, 3, 20, len(payload) // 2, len(payload) - 1):
            path = tmp_path / f"cut{cut}.secn"
            path.write_bytes(payload[:cut])
            with pytest.raises(CheckpointError):
                load_checkpoint(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "absent.secn")

    def test_summary_has_structure_only(self):
        checkpoint = make_checkpoint()
        checkpoint.checksum = 0xABC
        summary = summarize_checkpoint(checkpoint)
        assert summary["kind"] == "sepcross"
        assert summary["checksum"] == "0000000000000abc"
        assert summary["cross_layers"] == 2
        assert summary["separated"] is True
        assert summary["num_fields"] == 4
        assert summary["parameter_count"] == build_model(checkpoint.model_config).parameter_count()
        assert summary["shapes"]["cross.0.W_C"] == [3, 4, 4]

    def test_fm_summary_reports_k(self):
        summary = summarize_checkpoint(make_checkpoint(ModelKind.FM))
        assert summary["kind"] == "fm"
        assert summary["k"] == 3
        assert "cross_layers" not in summary

    def test_stats_values_survive(self):
        loaded = decode_checkpoint(encode_checkpoint(make_checkpoint()))
        assert np.array_equal(loaded.stats.apply(np.array([[2.5, 7.0]])), [[1.0, 0.0]])

    def test_chunked_checksum_matches_single_pass(self, caplog):
        payload = encode_checkpoint(make_checkpoint())
        assert checkpoint_checksum(payload[:-8], chunk_size=64) == int.from_bytes(payload[-8:], "little")
        with caplog.at_level(logging.INFO, logger="app.persistence.checkpoint"):
            caplog.clear()
            chunked = checkpoint_checksum(payload, chunk_size=100)
        assert chunked == fnv1a64(payload)
        progress = [r for r in caplog.records if "Checksummed" in r.getMessage()]
        assert len(progress) == -(-len(payload) // 100)
        assert progress[-1].getMessage().endswith("(100%)")

    def test_split_fraction_is_recorded(self):
        checkpoint = make_checkpoint()
        checkpoint.valid_frac = 0.2
        assert decode_checkpoint(encode_checkpoint(checkpoint)).valid_frac == 0.2
        assert decode_checkpoint(encode_checkpoint(make_checkpoint())).valid_frac is None
