"""Mini-batching and the train/validation split."""

import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from app.core.rng import SeededRng
from app.data.examples import ExampleSet
from app.errors import ConfigError, DataError
from app.schemas.dataset import DenseStats

logger = logging.getLogger(__name__)

SPLIT_STREAM = 2


@dataclass
class Batch:
    """A slice of examples and the row indices it was taken from."""

    indices: np.ndarray
    examples: ExampleSet

    def __len__(self) -> int:
        return len(self.examples)


class TrainValidSplit(NamedTuple):
    train: ExampleSet
    valid: ExampleSet
    stats: DenseStats


def make_batches(examples: ExampleSet, batch_size: int, rng: Optional[SeededRng], shuffle: bool) -> List[Batch]:
    """Cover every example exactly once; the final short batch is kept."""
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    n = len(examples)
    if n == 0:
        raise DataError("cannot batch an empty dataset")
    if shuffle:
        if rng is None:
            raise ValueError("shuffling needs a SeededRng")
        order = rng.permutation(n)
    else:
        order = np.arange(n)
    return [
        Batch(indices=order[start:start + batch_size], examples=examples.subset(order[start:start + batch_size]))
        for start in range(0, n, batch_size)
    ]


def standardize(train: ExampleSet, *others: ExampleSet):
    """Fit DenseStats on the train set and apply them to every given set."""
    stats = DenseStats.fit(train.dense)
    out = [train.with_dense(stats.apply(train.dense))]
    out.extend(o.with_dense(stats.apply(o.dense)) for o in others)
    return stats, out


def split_indices(n: int, valid_fraction: float, rng: SeededRng) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted (train, valid) row indices of a seeded split of n rows."""
    if not 0.0 < valid_fraction < 1.0:
        raise ConfigError(f"valid_fraction must lie in (0, 1), got {valid_fraction}")
    n_valid = int(round(n * valid_fraction))
    if n_valid == 0 or n_valid == n:
        raise DataError(f"splitting {n} examples with fraction {valid_fraction} leaves one side empty")
    order = rng.permutation(n)
    return np.sort(order[n_valid:]), np.sort(order[:n_valid])


def split_train_valid(examples: ExampleSet, valid_fraction: float, rng: SeededRng) -> TrainValidSplit:
    """Disjoint, exhaustive split; dense features standardised with train-side stats."""
    train_idx, valid_idx = split_indices(len(examples), valid_fraction, rng)
    stats, (train, valid) = standardize(examples.subset(train_idx), examples.subset(valid_idx))
    logger.info(f"Split {len(examples)} examples into {len(train)} train / {len(valid)} valid")
    return TrainValidSplit(train=train, valid=valid, stats=stats)
