import logging

from app.training.trainer import fit

logger = logging.getLogger(__name__)


def train_node(state: dict) -> dict:
    """Fit the configured model on the preprocessed split."""
    try:
        params, report = fit(state["model_config"], state["train_config"], state["train"], state["valid"])
        logger.info(f"Training finished in {report.wall_seconds:.1f}s; best epoch {report.best_epoch}")
        return {**state, "params": params, "report": report}

    except Exception as e:
        logger.error(f"Error in train_node: {str(e)}")
        return {**state, "error": e}
