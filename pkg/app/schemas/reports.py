from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class EpochRecord(BaseModel):
    epoch: int
    train_logloss: float
    valid_logloss: Optional[float] = None
    valid_auc: Optional[float] = None


class TrainReport(BaseModel):
    """Per-epoch metrics of one fit; one record per completed epoch."""

    epochs: List[EpochRecord] = Field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False
    wall_seconds: float = 0.0

    @property
    def best(self) -> EpochRecord:
        return self.epochs[self.best_epoch]


class EvalMetrics(BaseModel):
    logloss: float
    auc: Optional[float] = Field(None, description="None when the labels hold a single class")
    n: int
    n_pos: int


class GradCheckReport(BaseModel):
    kind: str
    separated: bool
    tolerance: float
    max_errors: Dict[str, float]

    @property
    def passed(self) -> bool:
        return all(err < self.tolerance for err in self.max_errors.values())
