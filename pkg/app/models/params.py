"""Named parameter arrays and their gradients.

Parameters are an ordered mapping name -> float64 array. Embedding-style tables
(one row per bucket) are flagged sparse: their gradients only carry the rows a
batch touched, as SparseRows.
"""

from typing import Dict, Iterable, Iterator, Optional, Tuple

import numpy as np

from app.errors import ShapeError

_GROUP_BY_PREFIX = (
    ("emb.", "embedding"),
    ("dense_proj", "dense_proj"),
    ("cross.", "cross"),
    ("attn.", "attention"),
    ("head.", "head"),
    ("fm.w0", "fm_bias"),
    ("fm.w_dense", "fm_linear"),
    ("fm.w.", "fm_linear"),
    ("fm.v.", "fm_latent"),
)


def param_group(name: str) -> str:
    """Reporting group of a parameter name (e.g. 'cross.1.W_C' -> 'cross')."""
    for prefix, group in _GROUP_BY_PREFIX:
        if name.startswith(prefix):
            return group
    return name


class ModelParams:
    def __init__(self, groups: Dict[str, np.ndarray], sparse: Iterable[str] = ()):
        self.groups: Dict[str, np.ndarray] = {
            name: np.ascontiguousarray(value, dtype=np.float64) for name, value in groups.items()
        }
        self.sparse = frozenset(sparse)
        unknown = self.sparse - self.groups.keys()
        if unknown:
            raise KeyError(f"sparse groups not present: {sorted(unknown)}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.groups[name]

    def __setitem__(self, name: str, value: np.ndarray) -> None:
        if name not in self.groups:
            raise KeyError(name)
        value = np.asarray(value, dtype=np.float64)
        if value.shape != self.groups[name].shape:
            raise ShapeError(f"{name}: cannot assign shape {value.shape} to {self.groups[name].shape}")
        self.groups[name] = np.ascontiguousarray(value)

    def __contains__(self, name: str) -> bool:
        return name in self.groups

    def __iter__(self) -> Iterator[str]:
        return iter(self.groups)

    def items(self) -> Iterator[Tuple[str, np.ndarray]]:
        return iter(self.groups.items())

    def names(self):
        return list(self.groups)

    def copy(self) -> "ModelParams":
        return ModelParams({name: value.copy() for name, value in self.groups.items()}, self.sparse)

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: value.shape for name, value in self.groups.items()}

    def num_parameters(self) -> int:
        return int(sum(value.size for value in self.groups.values()))

    def equals(self, other: "ModelParams") -> bool:
        """Bit-exact equality of names, shapes and values."""
        if self.names() != other.names() or self.sparse != other.sparse:
            return False
        return all(np.array_equal(self[name], other[name]) for name in self.groups)


class SparseRows:
    """Gradient rows of one table: unique sorted row ids and their summed values."""

    def __init__(self, rows: np.ndarray, values: np.ndarray):
        self.rows = np.asarray(rows, dtype=np.int64)
        self.values = np.asarray(values, dtype=np.float64)
        if self.values.shape[0] != self.rows.shape[0]:
            raise ShapeError(f"{self.rows.shape[0]} rows but {self.values.shape[0]} value rows")

    @classmethod
    def aggregate(cls, indices: np.ndarray, values: np.ndarray) -> "SparseRows":
        """Sum values that share a row id; the reduction order is fixed by np.add.at."""
        rows, inverse = np.unique(np.asarray(indices, dtype=np.int64), return_inverse=True)
        summed = np.zeros((rows.shape[0],) + values.shape[1:], dtype=np.float64)
        np.add.at(summed, inverse.reshape(-1), values)
        return cls(rows, summed)


class Gradients:
    """Structural mirror of ModelParams."""

    def __init__(self, dense: Dict[str, np.ndarray], sparse: Optional[Dict[str, SparseRows]] = None):
        self.dense = dense
        self.sparse = sparse or {}

    def names(self):
        return list(self.dense) + list(self.sparse)

    def check_congruent(self, params: ModelParams) -> None:
        if set(self.names()) != set(params.names()):
            missing = set(params.names()) - set(self.names())
            extra = set(self.names()) - set(params.names())
            raise ShapeError(f"gradient groups differ from parameters: missing {sorted(missing)}, extra {sorted(extra)}")
        for name, grad in self.dense.items():
            if name in params.sparse:
                raise ShapeError(f"{name}: table parameter given a dense gradient")
            if grad.shape != params[name].shape:
                raise ShapeError(f"{name}: gradient shape {grad.shape} != parameter shape {params[name].shape}")
        for name, rows in self.sparse.items():
            table = params[name]
            if name not in params.sparse:
                raise ShapeError(f"{name}: dense parameter given a row gradient")
            if rows.values.shape[1:] != table.shape[1:]:
                raise ShapeError(f"{name}: gradient row shape {rows.values.shape[1:]} != {table.shape[1:]}")
            if rows.rows.size and (rows.rows.min() < 0 or rows.rows.max() >= table.shape[0]):
                raise ShapeError(f"{name}: gradient row outside [0, {table.shape[0]})")

    def first_non_finite(self) -> Optional[str]:
        for name, grad in self.dense.items():
            if not np.all(np.isfinite(grad)):
                return name
        for name, rows in self.sparse.items():
            if not np.all(np.isfinite(rows.values)):
                return name
        return None

    def to_dense(self, params: ModelParams) -> Dict[str, np.ndarray]:
        """Full-shape arrays (untouched table rows are zero)."""
        out = {name: grad.copy() for name, grad in self.dense.items()}
        for name, rows in self.sparse.items():
            full = np.zeros_like(params[name])
            full[rows.rows] = rows.values
            out[name] = full
        return out
