"""Common model interface: batched forward with retained intermediates, exact backward."""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from app.core.rng import SeededRng
from app.data.examples import ExampleSet
from app.models.params import Gradients, ModelParams
from app.schemas.model_config import ModelConfig, ModelKind

PREDICT_CHUNK = 8192


@dataclass
class ForwardTrace:
    """Intermediates of one forward pass over B examples.

    hidden holds H^0..H^L, each (B, N, d); pre_activations holds the cross-layer
    inputs to f, Z^1..Z^L. probability == sigmoid(logit), unclipped.
    """

    hidden: List[np.ndarray]
    pre_activations: List[np.ndarray]
    pooled: np.ndarray
    logit: np.ndarray
    probability: np.ndarray
    extras: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def batch_size(self) -> int:
        return int(self.logit.shape[0])


class CtrModel(ABC):
    kind: ModelKind

    def __init__(self, config: ModelConfig):
        self.config = config

    @abstractmethod
    def init_params(self, rng: SeededRng) -> ModelParams:
        ...

    @abstractmethod
    def forward(self, examples: ExampleSet, params: ModelParams) -> ForwardTrace:
        ...

    @abstractmethod
    def backward(self, trace: ForwardTrace, examples: ExampleSet, params: ModelParams,
                 scale: float = 1.0) -> Gradients:
        """Gradient of scale * sum_b logloss_b (unclipped) w.r.t. every parameter."""

    @abstractmethod
    def parameter_count(self) -> int:
        """Closed-form number of scalar parameters for this config."""

    def loss_and_gradients(self, examples: ExampleSet, params: ModelParams) -> Tuple[float, Gradients, ForwardTrace]:
        """Mean batch logloss and its gradient."""
        trace = self.forward(examples, params)
        loss = float(np.mean(logloss_from_logits(trace.logit, examples.labels)))
        grads = self.backward(trace, examples, params, scale=1.0 / len(examples))
        return loss, grads, trace

    def predict(self, examples: ExampleSet, params: ModelParams, chunk: int = PREDICT_CHUNK) -> np.ndarray:
        """Click probabilities, scored in fixed-size chunks."""
        parts = [
            self.forward(examples.subset(np.arange(start, min(start + chunk, len(examples)))), params).probability
            for start in range(0, len(examples), chunk)
        ]
        return np.concatenate(parts) if parts else np.zeros(0)


def logloss_from_logits(logit: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-example -[y ln p + (1-y) ln(1-p)] with p = sigmoid(logit), computed as softplus(z) - y z."""
    return np.logaddexp(0.0, logit) - labels * logit
