import logging

from app.core.rng import SeededRng
from app.data.batching import SPLIT_STREAM, split_train_valid, standardize

logger = logging.getLogger(__name__)


def preprocess_node(state: dict) -> dict:
    """Split (unless a validation file was given) and z-score dense features with train-side stats."""
    run_config = state["run_config"]
    raw_train = state["raw_train"]
    raw_valid = state.get("raw_valid")

    try:
        if raw_valid is None:
            rng = SeededRng(state["train_config"].seed).derive(SPLIT_STREAM)
            train, valid, stats = split_train_valid(raw_train, run_config.valid_frac, rng)
            valid_frac = run_config.valid_frac
        else:
            stats, (train, valid) = standardize(raw_train, raw_valid)
            valid_frac = None

        logger.info(f"Preprocessed {len(train)} train / {len(valid)} validation examples")
        return {**state, "train": train, "valid": valid, "stats": stats, "valid_frac": valid_frac}

    except Exception as e:
        logger.error(f"Error in preprocess_node: {str(e)}")
        return {**state, "error": e}
