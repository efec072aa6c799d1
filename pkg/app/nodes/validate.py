import logging

from pydantic import ValidationError

from app.errors import ConfigError

logger = logging.getLogger(__name__)


def validate_node(state: dict) -> dict:
    """Check paths and build the validated schema/model/training configs."""
    run_config = state["run_config"]

    logger.info("Validating run configuration")

    try:
        run_config.validate_for_training()
        schema = run_config.dataset_schema()
        model_config = run_config.model_config(schema)
        train_config = run_config.train_config()
        logger.info(f"Configuration valid: {model_config.kind.value}, schema {schema.describe()}")
        return {**state, "schema": schema, "model_config": model_config, "train_config": train_config}

    except ValidationError as e:
        logger.error(f"Config validation error: {str(e)}")
        return {**state, "error": ConfigError(str(e))}
    except Exception as e:
        logger.error(f"Validation error: {str(e)}")
        return {**state, "error": e}
