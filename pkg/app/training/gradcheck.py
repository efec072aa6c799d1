"""Finite-difference verification of the analytic gradients."""

import logging
from collections import defaultdict
from typing import Callable, Dict, Optional

import numpy as np

from app.core.rng import SeededRng
from app.data.examples import ExampleSet
from app.models.base import logloss_from_logits
from app.models.params import Gradients, ModelParams, param_group
from app.models.registry import build_model
from app.schemas.dataset import DatasetSchema
from app.schemas.model_config import ModelConfig, ModelKind
from app.schemas.reports import GradCheckReport

logger = logging.getLogger(__name__)

GRADCHECK_FIELDS = 4
GRADCHECK_BUCKETS = 16
GRADCHECK_DENSE = 2
GRADCHECK_DIM = 3
GRADCHECK_LAYERS = 2
GRADCHECK_BATCH = 8
GRADCHECK_STEP = 1e-5
GRADCHECK_TOLERANCE = 1e-4
PARAM_SCALE = 0.5

GradientHook = Callable[[Gradients], Gradients]


def small_config(kind: ModelKind, separated: bool = True) -> ModelConfig:
    """4 fields x 16 buckets, 2 dense columns, d=3, L=2."""
    schema = DatasetSchema.uniform(GRADCHECK_DENSE, GRADCHECK_FIELDS, GRADCHECK_BUCKETS)
    return ModelConfig(kind=kind, dataset=schema, embed_dim=GRADCHECK_DIM,
                       cross_layers=GRADCHECK_LAYERS, separated=separated)


def random_batch(schema: DatasetSchema, size: int, rng: SeededRng) -> ExampleSet:
    cats = np.stack([rng.integers(0, b, size) for b in schema.buckets_per_field], axis=1) \
        if schema.num_categorical else np.zeros((size, 0), dtype=np.int64)
    dense = rng.normal(1.0, (size, schema.num_dense))
    labels = (rng.uniforms(size) < 0.5).astype(np.float64)
    return ExampleSet.from_arrays(labels, dense, cats)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    return np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic) + np.abs(numeric))


def grad_check(kind: ModelKind, config: Optional[ModelConfig] = None, seed: int = 0,
               gradient_hook: Optional[GradientHook] = None) -> GradCheckReport:
    """Compare the analytic batch gradient with central differences.

    Every parameter is drawn from N(0, 0.5^2) so no group starts at zero. Only
    table rows touched by the check batch are perturbed. The checked loss is
    the summed (unclipped) logloss of the batch. Failure is reported, not raised.
    """
    config = config or small_config(kind)
    if config.kind is not kind:
        config = config.model_copy(update={"kind": kind})
    model = build_model(config)
    rng = SeededRng(seed)
    params = model.init_params(rng.derive(0))
    value_rng = rng.derive(1)
    for name in params.names():
        params[name] = value_rng.normal(PARAM_SCALE, params[name].shape)
    batch = random_batch(config.dataset, GRADCHECK_BATCH, rng.derive(2))

    def total_loss(p: ModelParams) -> float:
        return float(logloss_from_logits(model.forward(batch, p).logit, batch.labels).sum())

    grads = model.backward(model.forward(batch, params), batch, params, scale=1.0)
    if gradient_hook is not None:
        grads = gradient_hook(grads)
    analytic = grads.to_dense(params)

    errors: Dict[str, float] = defaultdict(float)
    h = GRADCHECK_STEP
    for name in params.names():
        table = params[name]
        if name in params.sparse:
            field = int(name.rsplit(".", 1)[1])
            rows = np.unique(batch.cats[:, field])
            positions = [(r,) + tail for r in rows for tail in np.ndindex(*table.shape[1:])]
        else:
            positions = list(np.ndindex(*table.shape))
        for pos in positions:
            original = table[pos]
            table[pos] = original + h
            plus = total_loss(params)
            table[pos] = original - h
            minus = total_loss(params)
            table[pos] = original
            numeric = (plus - minus) / (2.0 * h)
            err = float(relative_error(np.array(analytic[name][pos]), np.array(numeric)))
            group = param_group(name)
            errors[group] = max(errors[group], err)

    report = GradCheckReport(kind=kind.value, separated=config.separated,
                             tolerance=GRADCHECK_TOLERANCE, max_errors=dict(errors))
    logger.info(f"Gradient check {kind.value} (separated={config.separated}): "
                f"{'pass' if report.passed else 'FAIL'} {report.max_errors}")
    return report
