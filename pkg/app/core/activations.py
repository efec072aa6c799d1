"""Activation functions and their derivatives, vectorised over numpy arrays."""

from enum import Enum
from typing import Union

import numpy as np

Real = Union[float, np.ndarray]


class Activation(str, Enum):
    IDENTITY = "identity"
    RELU = "relu"
    SIGMOID = "sigmoid"


def sigmoid(x: Real) -> Real:
    """Logistic function in the branch form that never overflows.

    For x >= 0 it evaluates 1/(1+e^-x); for x < 0 it evaluates e^x/(1+e^x),
    so sigmoid(-710) is a tiny positive subnormal instead of an overflow.
    """
    x = np.asarray(x, dtype=np.float64)
    z = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
    return out if out.ndim else float(out)


def activation(x: Real, kind: Activation) -> Real:
    kind = Activation(kind)
    if kind is Activation.IDENTITY:
        return x
    if kind is Activation.RELU:
        out = np.maximum(np.asarray(x, dtype=np.float64), 0.0)
        return out if out.ndim else float(out)
    return sigmoid(x)


def derivative(x: Real, kind: Activation) -> Real:
    """d activation(x) / dx; relu takes derivative 0 at the kink."""
    kind = Activation(kind)
    arr = np.asarray(x, dtype=np.float64)
    if kind is Activation.IDENTITY:
        out = np.ones_like(arr)
    elif kind is Activation.RELU:
        out = (arr > 0).astype(np.float64)
    else:
        s = np.asarray(sigmoid(arr))
        out = s * (1.0 - s)
    return out if out.ndim else float(out)


def log_sigmoid(x: Real) -> Real:
    """ln(sigmoid(x)) without cancellation: -softplus(-x)."""
    x = np.asarray(x, dtype=np.float64)
    out = -np.logaddexp(0.0, -x)
    return out if out.ndim else float(out)
