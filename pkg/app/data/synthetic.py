"""Synthetic CTR data with planted pairwise interactions and a known Bayes AUC."""

from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.activations import sigmoid
from app.core.rng import SeededRng
from app.data.examples import ExampleSet
from app.schemas.dataset import DatasetSchema

SYNTH_DENSE_MAX = 100


class SyntheticSpec(BaseModel):
    """Ground-truth FM-style generator.

    latents[j] has shape (buckets_per_field[j], k_true); row 0 (missing) is
    never drawn. Dense columns, when present, are label-independent noise.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    dataset: DatasetSchema
    latents: List[np.ndarray]
    k_true: int = Field(..., ge=1)
    bias: float = 0.0
    seed: int = Field(..., ge=0)
    n: int = Field(..., ge=1)

    @model_validator(mode="after")
    def _check_latents(self) -> "SyntheticSpec":
        if len(self.latents) != self.dataset.num_categorical:
            raise ValueError(f"{len(self.latents)} latent tables for {self.dataset.num_categorical} fields")
        for j, (table, buckets) in enumerate(zip(self.latents, self.dataset.buckets_per_field)):
            if table.shape != (buckets, self.k_true):
                raise ValueError(f"field {j}: latent table shape {table.shape}, expected {(buckets, self.k_true)}")
            if not np.all(np.isfinite(table)):
                raise ValueError(f"field {j}: latent values must be finite")
        return self

    @classmethod
    def random(cls, dataset: DatasetSchema, k_true: int, latent_scale: float,
               bias: float, seed: int, n: int) -> "SyntheticSpec":
        """Gaussian latents with standard deviation `latent_scale`, drawn from a stream derived from seed."""
        rng = SeededRng(seed).derive(1)
        latents = [rng.normal(latent_scale, (buckets, k_true)) for buckets in dataset.buckets_per_field]
        return cls(dataset=dataset, latents=latents, k_true=k_true, bias=bias, seed=seed, n=n)


def pairwise_logits(spec: SyntheticSpec, cats: np.ndarray) -> np.ndarray:
    """bias + sum_{i<j} <u_i(c_i), u_j(c_j)>, via the O(nk) square-of-sums identity."""
    if spec.dataset.num_categorical == 0:
        return np.full(cats.shape[0], spec.bias)
    rows = np.stack([spec.latents[j][cats[:, j]] for j in range(spec.dataset.num_categorical)], axis=1)
    total = rows.sum(axis=1)
    return spec.bias + 0.5 * (total ** 2 - (rows ** 2).sum(axis=1)).sum(axis=1)


def generate_synthetic(spec: SyntheticSpec) -> Tuple[ExampleSet, np.ndarray]:
    """Draw n labeled examples; returns them with the true logits.

    Draw order is fixed (buckets field by field, dense noise, label uniforms),
    so a given spec reproduces bit-for-bit.
    """
    rng = SeededRng(spec.seed)
    schema = spec.dataset
    cats = np.zeros((spec.n, schema.num_categorical), dtype=np.int64)
    for j, buckets in enumerate(schema.buckets_per_field):
        cats[:, j] = rng.integers(1, buckets, spec.n)
    raw_dense = rng.integers(0, SYNTH_DENSE_MAX, spec.n * schema.num_dense).reshape(spec.n, schema.num_dense)
    dense = np.log1p(raw_dense.astype(np.float64))

    logits = pairwise_logits(spec, cats)
    labels = (rng.uniforms(spec.n) < sigmoid(logits)).astype(np.float64)
    return ExampleSet(labels=labels, dense=dense, cats=cats), logits
