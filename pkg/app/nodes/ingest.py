import logging

from app.data.criteo import load_criteo

logger = logging.getLogger(__name__)


def ingest_node(state: dict) -> dict:
    """Parse and hash the train (and optional validation) files."""
    run_config = state["run_config"]
    schema = state["schema"]

    logger.info(f"Ingesting {run_config.train}")

    try:
        raw_train, rejects = load_criteo(run_config.train, schema)
        raw_valid = None
        if run_config.valid:
            raw_valid, valid_rejects = load_criteo(run_config.valid, schema)
            rejects = rejects + valid_rejects

        logger.info(
            f"Ingested {len(raw_train)} train records"
            + (f" and {len(raw_valid)} validation records" if raw_valid is not None else "")
            + f" ({len(rejects)} rejected lines)"
        )
        return {**state, "raw_train": raw_train, "raw_valid": raw_valid, "rejects": rejects}

    except Exception as e:
        logger.error(f"Error in ingest_node: {str(e)}")
        return {**state, "error": e}
