"""
Output node: persist the checkpoint and the per-epoch metrics table.
"""

import csv
import logging
from pathlib import Path
from typing import Any, Dict

from app.persistence.checkpoint import Checkpoint, save_checkpoint
from app.schemas.reports import TrainReport

logger = logging.getLogger(__name__)

METRICS_COLUMNS = ("epoch", "train_logloss", "valid_logloss", "valid_auc")


def _cell(value) -> str:
    return "" if value is None else repr(value)


def write_metrics_table(path: Path, report: TrainReport) -> None:
    """Comma-separated, header row first, one row per completed epoch."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(METRICS_COLUMNS)
        for record in report.epochs:
            writer.writerow([record.epoch, _cell(record.train_logloss),
                             _cell(record.valid_logloss), _cell(record.valid_auc)])


def output_node(state: Dict[str, Any]) -> Dict[str, Any]:
    run_config = state["run_config"]

    logger.info("Writing checkpoint and metrics table")

    try:
        checkpoint = Checkpoint(
            model_config=state["model_config"],
            stats=state["stats"],
            params=state["params"],
            seed=state["train_config"].seed,
            valid_frac=state.get("valid_frac"),
        )
        checksum = save_checkpoint(run_config.out, checkpoint)
        metrics_path = run_config.metrics_path()
        write_metrics_table(metrics_path, state["report"])
        logger.info(f"Wrote metrics table to {metrics_path}")
        return {**state, "checksum": checksum}

    except Exception as e:
        logger.error(f"Error in output_node: {str(e)}")
        return {**state, "error": e}
