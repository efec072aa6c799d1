"""Factorization machine baseline over the hashed categorical buckets.

logit = w0 + sum_f w_f(c_f) + w_dense . dense + sum_{i<j} <v_i, v_j>, with the
pairwise sum evaluated as 1/2 sum_k [(sum_i v_ik)^2 - sum_i v_ik^2]. Transformed
dense values enter as linear features only.
"""

import numpy as np

from app.core.activations import sigmoid
from app.core.rng import SeededRng
from app.data.examples import ExampleSet
from app.errors import SchemaMismatchError, ShapeError
from app.models.base import CtrModel, ForwardTrace
from app.models.params import Gradients, ModelParams, SparseRows
from app.schemas.model_config import ModelKind

FM_INIT_STD = 0.01


def linear_name(field: int) -> str:
    return f"fm.w.{field}"


def latent_name(field: int) -> str:
    return f"fm.v.{field}"


def pairwise_term(rows: np.ndarray) -> np.ndarray:
    """O(nk) identity for sum_{i<j} <v_i, v_j>; rows is (B, F, k)."""
    total = rows.sum(axis=1)
    return 0.5 * (total ** 2 - (rows ** 2).sum(axis=1)).sum(axis=1)


def pairwise_term_naive(rows: np.ndarray) -> np.ndarray:
    """Explicit double loop over field pairs."""
    out = np.zeros(rows.shape[0])
    for i in range(rows.shape[1]):
        for j in range(i + 1, rows.shape[1]):
            out += (rows[:, i, :] * rows[:, j, :]).sum(axis=1)
    return out


class FmModel(CtrModel):
    kind = ModelKind.FM

    @property
    def k(self) -> int:
        return self.config.embed_dim

    def init_params(self, rng: SeededRng) -> ModelParams:
        schema = self.config.dataset
        groups = {"fm.w0": np.zeros(1)}
        for j, buckets in enumerate(schema.buckets_per_field):
            groups[linear_name(j)] = np.zeros(buckets)
        for j, buckets in enumerate(schema.buckets_per_field):
            groups[latent_name(j)] = rng.normal(FM_INIT_STD, (buckets, self.k))
        if schema.num_dense:
            groups["fm.w_dense"] = np.zeros(schema.num_dense)
        sparse = [name for name in groups if name.startswith(("fm.w.", "fm.v."))]
        return ModelParams(groups, sparse)

    def _latent_rows(self, examples: ExampleSet, params: ModelParams) -> np.ndarray:
        schema = self.config.dataset
        if examples.cats.shape[1] != schema.num_categorical or examples.dense.shape[1] != schema.num_dense:
            raise SchemaMismatchError(f"examples do not match the FM schema {schema.describe()}")
        if schema.num_categorical == 0:
            return np.zeros((len(examples), 0, self.k))
        return np.stack([params[latent_name(j)][examples.cats[:, j]] for j in range(schema.num_categorical)], axis=1)

    def forward(self, examples: ExampleSet, params: ModelParams) -> ForwardTrace:
        schema = self.config.dataset
        rows = self._latent_rows(examples, params)
        logit = np.full(len(examples), params["fm.w0"][0])
        for j in range(schema.num_categorical):
            logit = logit + params[linear_name(j)][examples.cats[:, j]]
        if schema.num_dense:
            logit = logit + examples.dense @ params["fm.w_dense"]
        logit = logit + pairwise_term(rows)
        return ForwardTrace(hidden=[], pre_activations=[], pooled=rows.sum(axis=1),
                            logit=logit, probability=sigmoid(logit), extras={"rows": rows})

    def backward(self, trace: ForwardTrace, examples: ExampleSet, params: ModelParams,
                 scale: float = 1.0) -> Gradients:
        schema = self.config.dataset
        if trace.batch_size != len(examples) or "rows" not in trace.extras:
            raise ShapeError("trace was not produced by this FM on these examples")
        g = scale * (trace.probability - examples.labels)
        rows, total = trace.extras["rows"], trace.pooled
        dense = {"fm.w0": np.array([g.sum()])}
        sparse = {}
        for j in range(schema.num_categorical):
            sparse[linear_name(j)] = SparseRows.aggregate(examples.cats[:, j], g)
        for j in range(schema.num_categorical):
            # d/dv_j of the pairwise term is (sum_i v_i) - v_j
            sparse[latent_name(j)] = SparseRows.aggregate(
                examples.cats[:, j], g[:, None] * (total - rows[:, j, :])
            )
        if schema.num_dense:
            dense["fm.w_dense"] = examples.dense.T @ g
        return Gradients(dense, sparse)

    def parameter_count(self) -> int:
        schema = self.config.dataset
        return 1 + sum(schema.buckets_per_field) * (1 + self.k) + schema.num_dense


def fm_forward(examples: ExampleSet, params: ModelParams, model: FmModel):
    trace = model.forward(examples, params)
    return trace.logit, trace.probability


def fm_backward(examples: ExampleSet, params: ModelParams, model: FmModel, scale: float = 1.0) -> Gradients:
    return model.backward(model.forward(examples, params), examples, params, scale)
