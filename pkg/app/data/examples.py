"""Columnar container for encoded examples."""

from dataclasses import dataclass

import numpy as np

from app.errors import SchemaMismatchError
from app.schemas.dataset import DatasetSchema, Example


@dataclass(frozen=True)
class ExampleSet:
    """n encoded examples stored column-wise.

    labels: (n,) float64 of 0/1, dense: (n, num_dense) float64,
    cats: (n, num_categorical) int64 bucket indices.
    Instances are treated as immutable and may be shared read-only.
    """

    labels: np.ndarray
    dense: np.ndarray
    cats: np.ndarray

    def __post_init__(self):
        n = self.labels.shape[0]
        if self.dense.shape[0] != n or self.cats.shape[0] != n:
            raise ValueError(
                f"column lengths disagree: labels {n}, dense {self.dense.shape[0]}, cats {self.cats.shape[0]}"
            )

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def n_pos(self) -> int:
        return int(self.labels.sum())

    @classmethod
    def from_arrays(cls, labels, dense, cats) -> "ExampleSet":
        labels = np.asarray(labels, dtype=np.float64).reshape(-1)
        n = labels.shape[0]
        dense = np.asarray(dense, dtype=np.float64).reshape(n, -1)
        cats = np.asarray(cats, dtype=np.int64).reshape(n, -1)
        return cls(labels=labels, dense=dense, cats=cats)

    def example(self, i: int) -> Example:
        """Row i as a validated record."""
        return Example(label=int(self.labels[i]), dense=self.dense[i].tolist(), cats=self.cats[i].tolist())

    def subset(self, indices: np.ndarray) -> "ExampleSet":
        return ExampleSet(labels=self.labels[indices], dense=self.dense[indices], cats=self.cats[indices])

    def with_dense(self, dense: np.ndarray) -> "ExampleSet":
        return ExampleSet(labels=self.labels, dense=np.asarray(dense, dtype=np.float64), cats=self.cats)

    def check_schema(self, schema: DatasetSchema) -> None:
        """Raise if any column count or bucket index breaks the schema."""
        if self.dense.shape[1] != schema.num_dense or self.cats.shape[1] != schema.num_categorical:
            raise SchemaMismatchError(
                f"data has {self.dense.shape[1]} dense + {self.cats.shape[1]} categorical columns, "
                f"schema is {schema.describe()}"
            )
        if len(self) and schema.num_categorical:
            limits = np.asarray(schema.buckets_per_field, dtype=np.int64)
            bad = (self.cats < 0) | (self.cats >= limits[None, :])
            if bad.any():
                row, field = map(int, np.argwhere(bad)[0])
                raise SchemaMismatchError(
                    f"row {row}, field {field}: bucket {self.cats[row, field]} outside [0, {limits[field]})"
                )
        if not np.all(np.isfinite(self.dense)):
            raise SchemaMismatchError("dense values must be finite")
