"""Mini-batch training loop with per-epoch evaluation and early stopping."""

import logging
import time
from typing import Optional, Tuple

import numpy as np

from app.core.rng import SeededRng
from app.data.batching import make_batches
from app.data.examples import ExampleSet
from app.errors import DataError, TrainingDivergedError
from app.metrics.metrics import evaluate
from app.models.params import ModelParams
from app.models.registry import build_model
from app.schemas.model_config import ModelConfig, TrainConfig
from app.schemas.reports import EpochRecord, TrainReport
from app.training.optimizer import OptimizerState, optimizer_step

logger = logging.getLogger(__name__)

INIT_STREAM = 0
SHUFFLE_STREAM = 1


def fit(model_config: ModelConfig, train_config: TrainConfig, train: ExampleSet,
        valid: Optional[ExampleSet] = None) -> Tuple[ModelParams, TrainReport]:
    """Train from a seeded initialisation.

    Metrics of each epoch are computed with the parameters at the end of that
    epoch. With a validation set, the parameters of the best validation
    logloss are returned; training stops once `early_stop_patience` epochs in
    a row fail to improve on it.
    """
    if len(train) == 0:
        raise DataError("training set is empty")
    if valid is not None and len(valid) == 0:
        raise DataError("validation set is empty")
    train.check_schema(model_config.dataset)
    if valid is not None:
        valid.check_schema(model_config.dataset)

    started = time.perf_counter()
    model = build_model(model_config)
    rng = SeededRng(train_config.seed)
    params = model.init_params(rng.derive(INIT_STREAM))
    shuffle_rng = rng.derive(SHUFFLE_STREAM)
    state = OptimizerState.create(params, train_config)
    logger.info(
        f"Training {model_config.kind.value} ({model.parameter_count()} parameters) on {len(train)} examples "
        f"for up to {train_config.epochs} epochs"
    )

    report = TrainReport()
    best_params = params.copy()
    best_loss = np.inf
    since_best = 0

    for epoch in range(train_config.epochs):
        batches = make_batches(train, train_config.batch_size, shuffle_rng, shuffle=True)
        for b, batch in enumerate(batches):
            loss, grads, _ = model.loss_and_gradients(batch.examples, params)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, b)
            optimizer_step(params, grads, state, train_config)

        train_metrics = evaluate(model, params, train)
        if not np.isfinite(train_metrics.logloss):
            raise TrainingDivergedError(epoch, len(batches) - 1)
        record = EpochRecord(epoch=epoch, train_logloss=train_metrics.logloss)
        if valid is not None:
            valid_metrics = evaluate(model, params, valid)
            record.valid_logloss = valid_metrics.logloss
            record.valid_auc = valid_metrics.auc
        report.epochs.append(record)
        logger.info(
            f"Epoch {epoch}: train logloss {record.train_logloss:.6f}, "
            f"valid logloss {record.valid_logloss}, valid AUC {record.valid_auc}"
        )

        if valid is None:
            report.best_epoch = epoch
            continue
        if record.valid_logloss < best_loss:
            best_loss = record.valid_logloss
            best_params = params.copy()
            report.best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if train_config.early_stop_patience and since_best >= train_config.early_stop_patience:
                logger.info(f"Early stopping after epoch {epoch}; best epoch was {report.best_epoch}")
                report.stopped_early = True
                break

    if valid is not None:
        params = best_params
    report.wall_seconds = time.perf_counter() - started
    return params, report
