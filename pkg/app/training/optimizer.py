"""SGD and Adam updates over ModelParams, with decoupled L2 decay.

Table parameters are updated lazily: only the rows present in the gradient
move, and their Adam moments are the only moments advanced.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from app.errors import NonFiniteGradientError, ShapeError
from app.models.params import Gradients, ModelParams
from app.schemas.model_config import OptimizerKind, TrainConfig


@dataclass
class OptimizerState:
    kind: OptimizerKind
    step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def create(cls, params: ModelParams, config: TrainConfig) -> "OptimizerState":
        if config.optimizer is OptimizerKind.SGD:
            return cls(kind=OptimizerKind.SGD)
        return cls(
            kind=OptimizerKind.ADAM,
            first_moment={name: np.zeros_like(value) for name, value in params.items()},
            second_moment={name: np.zeros_like(value) for name, value in params.items()},
        )

    def check_congruent(self, params: ModelParams) -> None:
        for moments in (self.first_moment, self.second_moment):
            for name, value in moments.items():
                if name not in params or value.shape != params[name].shape:
                    raise ShapeError(f"optimizer state for {name} does not match the parameters")


def _direction(grad: np.ndarray, m: Optional[np.ndarray], v: Optional[np.ndarray],
               state: OptimizerState, config: TrainConfig) -> np.ndarray:
    """Raw update direction; advances m and v in place for Adam."""
    if state.kind is OptimizerKind.SGD:
        return grad
    m *= config.beta1
    m += (1.0 - config.beta1) * grad
    v *= config.beta2
    v += (1.0 - config.beta2) * grad * grad
    m_hat = m / (1.0 - config.beta1 ** state.step)
    v_hat = v / (1.0 - config.beta2 ** state.step)
    return m_hat / (np.sqrt(v_hat) + config.epsilon)


def optimizer_step(params: ModelParams, grads: Gradients, state: OptimizerState,
                   config: TrainConfig) -> Tuple[ModelParams, OptimizerState]:
    """One update in place: theta <- theta - lr * (direction + l2 * theta) on touched parameters."""
    grads.check_congruent(params)
    state.check_congruent(params)
    bad = grads.first_non_finite()
    if bad is not None:
        raise NonFiniteGradientError(bad)

    state.step += 1
    lr, l2 = config.learning_rate, config.l2
    adam = state.kind is OptimizerKind.ADAM

    for name, grad in grads.dense.items():
        theta = params[name]
        m = state.first_moment[name] if adam else None
        v = state.second_moment[name] if adam else None
        update = _direction(grad, m, v, state, config)
        theta -= lr * (update + l2 * theta)

    for name, rows in grads.sparse.items():
        if rows.rows.size == 0:
            continue
        table = params[name]
        idx = rows.rows
        m = state.first_moment[name][idx] if adam else None
        v = state.second_moment[name][idx] if adam else None
        update = _direction(rows.values, m, v, state, config)
        if adam:
            state.first_moment[name][idx] = m
            state.second_moment[name][idx] = v
        table[idx] -= lr * (update + l2 * table[idx])

    return params, state
