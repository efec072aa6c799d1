#!/usr/bin/env python3
"""
Test suite for the command-line interface.
"""

import csv
import json
import os
import sys

import pytest
from unittest.mock import patch

# Add the project root to Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from app.errors import TrainingDivergedError
from app.main import main
from app.models.registry import build_model
from app.persistence.checkpoint import load_checkpoint
from app.schemas.reports import GradCheckReport

SCHEMA_FLAGS = ["--schema-dense", "2", "--schema-cats", "3", "--buckets", "10"]


def synth(tmp_path, name="data.tsv", n=800, seed=7, extra=()):
    out = tmp_path / name
    code = main(["synth", "--n", str(n), *SCHEMA_FLAGS, "--k-true", "2", "--latent-scale", "0.8",
                 "--seed", str(seed), "--out", str(out), *extra])
    assert code == 0
    return out


def train(tmp_path, data, *extra, out="model.secn"):
    return main(["train", "--train", str(data), *SCHEMA_FLAGS, "--dim", "4", "--epochs", "3",
                 "--batch", "64", "--lr", "0.01", "--out", str(tmp_path / out), *extra])


class TestSynthCommand:
    """cmd_synth."""

    def test_writes_data_and_sidecar(self, tmp_path):
        out = synth(tmp_path)
        meta = json.loads((tmp_path / "data.tsv.meta.json").read_text())
        print(f"Sidecar: {meta}")
        assert meta["seed"] == 7 and meta["n"] == 800
        assert meta["schema"]["buckets_per_field"] == [10, 10, 10]
        assert 0.5 < meta["bayes_auc"] <= 1.0
        assert len(out.read_text().splitlines()) == 800

    def test_zero_latents_have_no_signal(self, tmp_path):
        main(["synth", "--n", "1000", "--latent-scale", "0", "--out", str(tmp_path / "flat.tsv")])
        meta = json.loads((tmp_path / "flat.tsv.meta.json").read_text())
        assert 0.45 <= meta["bayes_auc"] <= 0.55

    def test_same_flags_identical_files(self, tmp_path):
        a = synth(tmp_path, "a.tsv")
        b = synth(tmp_path, "b.tsv")
        assert a.read_bytes() == b.read_bytes()

    def test_invalid_settings_exit_1(self, tmp_path):
        assert main(["synth", "--buckets", "1", "--out", str(tmp_path / "x.tsv")]) == 1


class TestTrainAndEval:
    """cmd_train, cmd_eval and cmd_inspect together."""

    def test_train_then_eval_matches_report(self, tmp_path, capsys):
        data = synth(tmp_path, "train.tsv", seed=7)
        valid = synth(tmp_path, "valid.tsv", n=200, seed=8)
        assert train(tmp_path, data, "--valid", str(valid)) == 0

        with open(tmp_path / "model.metrics.csv") as f:
            rows = list(csv.DictReader(f))
        assert [int(r["epoch"]) for r in rows] == list(range(len(rows)))
        best = min(rows, key=lambda r: float(r["valid_logloss"]))

        metrics_out = tmp_path / "eval.json"
        assert main(["eval", "--checkpoint", str(tmp_path / "model.secn"), "--train", str(data),
                     "--metrics-out", str(metrics_out)]) == 0
        metrics = json.loads(metrics_out.read_text())
        print(f"Eval metrics: {metrics}, best epoch row: {best}")
        assert metrics["n"] == 800
        assert abs(metrics["logloss"] - float(best["train_logloss"])) <= 1e-9
        assert "logloss:" in capsys.readouterr().out

    def test_eval_rebuilds_default_split(self, tmp_path):
        data = synth(tmp_path, "train.tsv", seed=7)
        assert train(tmp_path, data) == 0
        with open(tmp_path / "model.metrics.csv") as f:
            rows = list(csv.DictReader(f))
        best = min(rows, key=lambda r: float(r["valid_logloss"]))

        results = {}
        for split in ("train", "valid", "all"):
            out = tmp_path / f"eval_{split}.json"
            assert main(["eval", "--checkpoint", str(tmp_path / "model.secn"), "--train", str(data),
                         "--split", split, "--metrics-out", str(out)]) == 0
            results[split] = json.loads(out.read_text())
        print(f"Split metrics: {results}, best epoch row: {best}")

        assert load_checkpoint(tmp_path / "model.secn").valid_frac == 0.2
        assert (results["train"]["n"], results["valid"]["n"], results["all"]["n"]) == (640, 160, 800)
        assert abs(results["train"]["logloss"] - float(best["train_logloss"])) <= 1e-9
        assert abs(results["valid"]["logloss"] - float(best["valid_logloss"])) <= 1e-9
        assert abs(results["valid"]["auc"] - float(best["valid_auc"])) <= 1e-9

    def test_split_needs_an_in_file_split(self, tmp_path, capsys):
        data = synth(tmp_path, "train.tsv", seed=7)
        valid = synth(tmp_path, "valid.tsv", n=200, seed=8)
        assert train(tmp_path, data, "--valid", str(valid)) == 0
        assert load_checkpoint(tmp_path / "model.secn").valid_frac is None
        capsys.readouterr()
        code = main(["eval", "--checkpoint", str(tmp_path / "model.secn"), "--train", str(data),
                     "--split", "valid"])
        assert code == 1
        assert "--valid" in capsys.readouterr().err

    def test_same_seed_byte_identical(self, tmp_path):
        data = synth(tmp_path)
        assert train(tmp_path, data, out="a.secn") == 0
        assert train(tmp_path, data, out="b.secn") == 0
        assert (tmp_path / "a.secn").read_bytes() == (tmp_path / "b.secn").read_bytes()

    def test_zero_learning_rate_flat_validation(self, tmp_path):
        data = synth(tmp_path)
        assert train(tmp_path, data, "--lr", "0") == 0
        with open(tmp_path / "model.metrics.csv") as f:
            rows = list(csv.DictReader(f))
        assert rows[-1]["valid_logloss"] == rows[0]["valid_logloss"]

    def test_eval_single_class_reports_undefined_auc(self, tmp_path, capsys):
        data = synth(tmp_path)
        assert train(tmp_path, data) == 0
        negatives = tmp_path / "neg.tsv"
        negatives.write_text("".join(
            line + "\n" for line in data.read_text().splitlines() if line.startswith("0\t")
        ))
        capsys.readouterr()
        assert main(["eval", "--checkpoint", str(tmp_path / "model.secn"), "--train", str(negatives)]) == 0
        out = capsys.readouterr().out
        assert "auc: undefined" in out

    def test_eval_schema_mismatch_names_both(self, tmp_path, capsys):
        data = synth(tmp_path)
        assert train(tmp_path, data) == 0
        other = tmp_path / "other.tsv"
        main(["synth", "--n", "50", "--schema-dense", "1", "--schema-cats", "3", "--buckets", "10",
              "--out", str(other)])
        capsys.readouterr()
        assert main(["eval", "--checkpoint", str(tmp_path / "model.secn"), "--train", str(other)]) == 2
        err = capsys.readouterr().err
        print(f"Mismatch error: {err}")
        assert "2 dense + 3 categorical" in err

        code = main(["eval", "--checkpoint", str(tmp_path / "model.secn"), "--train", str(data),
                     "--buckets", "20"])
        err = capsys.readouterr().err
        assert code == 2
        assert "10 buckets/field" in err and "20 buckets/field" in err

    def test_tampered_checkpoint_is_rejected(self, tmp_path, capsys):
        data = synth(tmp_path)
        assert train(tmp_path, data) == 0
        path = tmp_path / "model.secn"
        payload = bytearray(path.read_bytes())
        payload[len(payload) // 2] ^= 0xFF
        path.write_bytes(bytes(payload))
        capsys.readouterr()
        assert main(["eval", "--checkpoint", str(path), "--train", str(data)]) == 2
        assert "checksum" in capsys.readouterr().err
        assert main(["inspect", "--checkpoint", str(path)]) == 2

    def test_inspect_prints_structure(self, tmp_path, capsys):
        data = synth(tmp_path)
        assert train(tmp_path, data) == 0
        capsys.readouterr()
        assert main(["inspect", "--checkpoint", str(tmp_path / "model.secn")]) == 0
        out = capsys.readouterr().out
        expected = build_model(load_checkpoint(tmp_path / "model.secn").model_config).parameter_count()
        print(out)
        assert "kind: sepcross" in out
        assert f"parameter_count: {expected} (closed form {expected})" in out
        assert "cross.0.W_C: 4x4x4" in out

    def test_inspect_fm_reports_k(self, tmp_path, capsys):
        data = synth(tmp_path)
        assert train(tmp_path, data, "--model", "fm", "--dim", "3") == 0
        capsys.readouterr()
        assert main(["inspect", "--checkpoint", str(tmp_path / "model.secn")]) == 0
        out = capsys.readouterr().out
        assert "kind: fm" in out and "k: 3" in out

    def test_inspect_truncated_file(self, tmp_path, capsys):
        path = tmp_path / "short.secn"
        path.write_bytes(b"SECN\x01\x00")
        assert main(["inspect", "--checkpoint", str(path)]) == 2
        assert "error:" in capsys.readouterr().err


class TestErrorsAndExitCodes:
    """Exit status contract: 0 ok, 1 usage/config, 2 data, 3 numeric."""

    def test_missing_train_file(self, tmp_path, capsys):
        code = main(["train", "--train", str(tmp_path / "absent.tsv"), "--out", str(tmp_path / "m.secn")])
        err = capsys.readouterr().err
        assert code == 1
        causes = [line for line in err.splitlines() if line.startswith("error:")]
        assert len(causes) == 1, f"expected one single-line cause, got {causes}"
        assert not (tmp_path / "m.secn").exists()

    def test_usage_errors(self):
        assert main([]) == 1
        assert main(["train", "--model", "dnn"]) == 1
        assert main(["train", "--epochs", "many"]) == 1

    def test_unparseable_data_is_a_data_error(self, tmp_path):
        data = tmp_path / "bad.tsv"
        data.write_text("garbage\n")
        assert train(tmp_path, data) == 2

    @pytest.mark.parametrize("args", [["--model", "sepcross"], ["--model", "sepcross", "--no-separated"],
                                      ["--model", "fm"], ["--model", "attn"]])
    def test_gradcheck_passes(self, args, capsys):
        assert main(["gradcheck", *args]) == 0
        assert capsys.readouterr().out.strip().endswith("PASS")

    def test_environment_overrides_defaults(self, tmp_path, monkeypatch):
        data = synth(tmp_path)
        monkeypatch.setenv("SECN_EPOCHS", "1")
        assert train(tmp_path, data, out="env.secn") == 0
        # explicit --epochs 3 from the helper wins over the environment
        with open(tmp_path / "env.metrics.csv") as f:
            assert len(list(csv.DictReader(f))) == 3


class TestCompareCommand:
    """cmd_compare."""

    def test_writes_one_row_per_seed_and_model(self, tmp_path):
        data = synth(tmp_path, n=600)
        out = tmp_path / "compare.csv"
        code = main(["compare", "--train", str(data), *SCHEMA_FLAGS, "--dim", "4", "--epochs", "1",
                     "--batch", "64", "--seeds", "1", "2", "--metrics-out", str(out),
                     "--out", str(tmp_path / "unused.secn")])
        assert code == 0
        with open(out) as f:
            rows = list(csv.DictReader(f))
        assert [(r["seed"], r["model"]) for r in rows] == [("1", "sepcross"), ("1", "fm"),
                                                           ("2", "sepcross"), ("2", "fm")]
        assert all(float(r["valid_logloss"]) > 0 for r in rows)


class TestNumericFailures:
    """Numeric failures surface as exit status 3."""

    def test_divergence_exits_3(self, tmp_path, capsys):
        data = synth(tmp_path)
        with patch("app.nodes.train.fit", side_effect=TrainingDivergedError(1, 4)):
            code = train(tmp_path, data)
        err = capsys.readouterr().err
        assert code == 3
        assert "error: training diverged at epoch 1, batch 4" in err
        assert not (tmp_path / "model.secn").exists()

    def test_failed_gradcheck_exits_3(self, capsys):
        failing = GradCheckReport(kind="sepcross", separated=True, tolerance=1e-4,
                                  max_errors={"cross": 0.5, "head": 1e-9})
        with patch("app.main.grad_check", return_value=failing):
            assert main(["gradcheck"]) == 3
        assert capsys.readouterr().out.strip().endswith("FAIL")
