"""Embedding lookup shared by the cross network and the attention variant.

E(X') = W_emb X' + b_emb over one-hot fields is a row lookup per field; the
bias is absorbed into the rows. Dense features optionally enter as one extra
field row dense^T . dense_proj.
"""

from typing import Dict

import numpy as np

from app.core.matrix import matmul
from app.core.rng import SeededRng
from app.data.examples import ExampleSet
from app.errors import SchemaMismatchError
from app.models.params import SparseRows
from app.schemas.model_config import ModelConfig


def embedding_name(field: int) -> str:
    return f"emb.{field}"


def init_embeddings(config: ModelConfig, rng: SeededRng) -> Dict[str, np.ndarray]:
    """Normal(0, 1/sqrt(d)) tables; bucket-0 rows are initialised like the rest."""
    d = config.embed_dim
    std = 1.0 / np.sqrt(d)
    groups = {
        embedding_name(j): rng.normal(std, (buckets, d))
        for j, buckets in enumerate(config.dataset.buckets_per_field)
    }
    if config.has_dense_field:
        groups["dense_proj"] = rng.normal(std, (config.dataset.num_dense, d))
    return groups


def embed_forward(examples: ExampleSet, params, config: ModelConfig) -> np.ndarray:
    """H^0 with shape (B, N, d): one row per categorical field, then the dense row."""
    schema = config.dataset
    if examples.cats.shape[1] != schema.num_categorical or examples.dense.shape[1] != schema.num_dense:
        raise SchemaMismatchError(
            f"examples have {examples.dense.shape[1]} dense + {examples.cats.shape[1]} categorical "
            f"columns, model expects {schema.describe()}"
        )
    rows = []
    for j, buckets in enumerate(schema.buckets_per_field):
        idx = examples.cats[:, j]
        if idx.size and (idx.min() < 0 or idx.max() >= buckets):
            raise SchemaMismatchError(f"field {j}: bucket index outside [0, {buckets})")
        rows.append(params[embedding_name(j)][idx])
    if config.has_dense_field:
        rows.append(matmul(examples.dense, params["dense_proj"]))
    return np.stack(rows, axis=1)


def embed_backward(d_h0: np.ndarray, examples: ExampleSet, config: ModelConfig):
    """Scatter dLoss/dH^0 back to the touched table rows and the dense projection."""
    sparse = {
        embedding_name(j): SparseRows.aggregate(examples.cats[:, j], d_h0[:, j, :])
        for j in range(config.dataset.num_categorical)
    }
    dense = {}
    if config.has_dense_field:
        dense["dense_proj"] = matmul(examples.dense.T, d_h0[:, -1, :])
    return dense, sparse


def embedding_parameter_count(config: ModelConfig) -> int:
    d = config.embed_dim
    count = sum(config.dataset.buckets_per_field) * d
    if config.has_dense_field:
        count += config.dataset.num_dense * d
    return count
