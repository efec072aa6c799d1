from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.errors import SchemaMismatchError

CRITEO_NUM_DENSE = 13
CRITEO_NUM_CATEGORICAL = 26
DEFAULT_BUCKETS = 100_000


class DatasetSchema(BaseModel):
    """Field layout of a dataset; bucket 0 of every field is reserved for missing."""

    model_config = ConfigDict(frozen=True)

    num_dense: int = Field(CRITEO_NUM_DENSE, ge=0, description="Number of integer (dense) columns")
    num_categorical: int = Field(CRITEO_NUM_CATEGORICAL, ge=0, description="Number of categorical fields")
    buckets_per_field: List[int] = Field(..., description="Hash bucket count per categorical field")

    @model_validator(mode="after")
    def _check_layout(self) -> "DatasetSchema":
        if self.num_dense + self.num_categorical < 1:
            raise ValueError("schema needs at least one dense or categorical field")
        if len(self.buckets_per_field) != self.num_categorical:
            raise ValueError(
                f"buckets_per_field has {len(self.buckets_per_field)} entries "
                f"for {self.num_categorical} categorical fields"
            )
        for j, buckets in enumerate(self.buckets_per_field):
            if buckets < 2:
                raise ValueError(f"field {j} needs at least 2 buckets (0 is reserved), got {buckets}")
        return self

    @classmethod
    def uniform(
        cls,
        num_dense: int = CRITEO_NUM_DENSE,
        num_categorical: int = CRITEO_NUM_CATEGORICAL,
        buckets: int = DEFAULT_BUCKETS,
    ) -> "DatasetSchema":
        return cls(num_dense=num_dense, num_categorical=num_categorical,
                   buckets_per_field=[buckets] * num_categorical)

    def describe(self) -> str:
        if self.buckets_per_field and len(set(self.buckets_per_field)) == 1:
            buckets = f"{self.buckets_per_field[0]} buckets/field"
        else:
            buckets = f"buckets={self.buckets_per_field}"
        return f"{self.num_dense} dense + {self.num_categorical} categorical ({buckets})"

    def require_same(self, other: "DatasetSchema") -> None:
        if self != other:
            raise SchemaMismatchError(f"schema mismatch: expected {self.describe()}, got {other.describe()}")


class Example(BaseModel):
    """One labeled record after dense transform and categorical hashing."""

    label: int = Field(..., ge=0, le=1)
    dense: List[float] = Field(default_factory=list)
    cats: List[int] = Field(default_factory=list)

    @field_validator("dense")
    @classmethod
    def _finite_dense(cls, values: List[float]) -> List[float]:
        if not all(np.isfinite(values)):
            raise ValueError("dense values must be finite")
        return values

    def check_schema(self, schema: DatasetSchema) -> None:
        if len(self.dense) != schema.num_dense or len(self.cats) != schema.num_categorical:
            raise SchemaMismatchError(
                f"example has {len(self.dense)} dense / {len(self.cats)} categorical values, "
                f"schema is {schema.describe()}"
            )
        for j, (bucket, limit) in enumerate(zip(self.cats, schema.buckets_per_field)):
            if not 0 <= bucket < limit:
                raise SchemaMismatchError(f"field {j}: bucket {bucket} outside [0, {limit})")


class DenseStats(BaseModel):
    """Per-column mean and standard deviation of the log-transformed dense features."""

    mean: List[float]
    std: List[float]

    @model_validator(mode="after")
    def _check(self) -> "DenseStats":
        if len(self.mean) != len(self.std):
            raise ValueError("mean and std must have the same length")
        if any(s < 0 for s in self.std):
            raise ValueError("std must be non-negative")
        return self

    @classmethod
    def fit(cls, dense: np.ndarray) -> "DenseStats":
        dense = np.asarray(dense, dtype=np.float64)
        if dense.shape[0] == 0:
            return cls(mean=[0.0] * dense.shape[1], std=[0.0] * dense.shape[1])
        return cls(mean=dense.mean(axis=0).tolist(), std=dense.std(axis=0).tolist())

    def apply(self, dense: np.ndarray) -> np.ndarray:
        """z-score each column; a column with std == 0 maps to 0."""
        dense = np.asarray(dense, dtype=np.float64)
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        safe = np.where(std > 0, std, 1.0)
        return np.where(std > 0, (dense - mean) / safe, 0.0)
