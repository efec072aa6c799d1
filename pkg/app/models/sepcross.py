"""Separation-embedding cross network.

embedding -> L cross layers H^i = f(W_C (H ∘ H) + W_R H + b_C) -> sum pooling
over fields -> sigmoid(V . P + b).

Cross matrices act on the field axis (N x N). In shared mode one (W_C, W_R, b_C)
serves every embedding column; in separated mode column j of H has its own
W_C^(j), W_R^(j), b_C^(j), so each embedding dimension is crossed independently.
All functions accept H as (N, d) or as a batch (B, N, d).
"""

import logging
from typing import Tuple

import numpy as np

from app.core.activations import Activation, activation, derivative, sigmoid
from app.core.matrix import hadamard, matmul, transpose_last
from app.core.rng import SeededRng
from app.data.examples import ExampleSet
from app.errors import ConfigError, ShapeError
from app.models.base import CtrModel, ForwardTrace
from app.models.embedding import embed_backward, embed_forward, embedding_parameter_count, init_embeddings
from app.models.params import Gradients, ModelParams
from app.schemas.model_config import ModelConfig, ModelKind

logger = logging.getLogger(__name__)


def layer_names(i: int) -> Tuple[str, str, str]:
    return f"cross.{i}.W_C", f"cross.{i}.W_R", f"cross.{i}.b_C"


def _check_layer_shapes(H: np.ndarray, W_C: np.ndarray, W_R: np.ndarray, b_C: np.ndarray) -> bool:
    """Validate shapes; returns True for separated mode."""
    n, d = H.shape[-2:]
    if W_C.ndim == 2:
        expected = ((n, n), (n, n), (n,))
    else:
        expected = ((d, n, n), (d, n, n), (d, n))
    if (W_C.shape, W_R.shape, b_C.shape) != expected:
        raise ShapeError(
            f"cross layer shapes W_C{W_C.shape} W_R{W_R.shape} b_C{b_C.shape} "
            f"do not fit H{H.shape}; expected {expected}"
        )
    return W_C.ndim == 3


def cross_layer_preactivation(H: np.ndarray, W_C: np.ndarray, W_R: np.ndarray, b_C: np.ndarray) -> np.ndarray:
    """W_C (H ∘ H) + W_R H + b_C, per mode."""
    separated = _check_layer_shapes(H, W_C, W_R, b_C)
    S = hadamard(H, H)
    if separated:
        return (np.einsum("jnm,...mj->...nj", W_C, S)
                + np.einsum("jnm,...mj->...nj", W_R, H)
                + b_C.T)
    return matmul(W_C, S) + matmul(W_R, H) + b_C[:, None]


def cross_layer_forward(H: np.ndarray, W_C: np.ndarray, W_R: np.ndarray, b_C: np.ndarray,
                        kind: Activation = Activation.IDENTITY) -> np.ndarray:
    return activation(cross_layer_preactivation(H, W_C, W_R, b_C), kind)


def sum_pool(H: np.ndarray) -> np.ndarray:
    """P[j] = sum over the N field rows of column j."""
    return H.sum(axis=-2)


def predict_head(P: np.ndarray, V: np.ndarray, b: float) -> Tuple[np.ndarray, np.ndarray]:
    if P.shape[-1] != V.shape[0]:
        raise ShapeError(f"pooled length {P.shape[-1]} != head length {V.shape[0]}")
    logit = P @ V + b
    return logit, sigmoid(logit)


def _cross_layer_backward(d_out: np.ndarray, Z: np.ndarray, H_prev: np.ndarray,
                          W_C: np.ndarray, W_R: np.ndarray, kind: Activation):
    """Backprop one layer; returns (dW_C, dW_R, db_C, dH_prev)."""
    dZ = d_out * derivative(Z, kind)
    S = H_prev * H_prev
    if W_C.ndim == 3:
        dW_C = np.einsum("bnj,bmj->jnm", dZ, S)
        dW_R = np.einsum("bnj,bmj->jnm", dZ, H_prev)
        db_C = dZ.sum(axis=0).T
        dS = np.einsum("jnm,bnj->bmj", W_C, dZ)
        dH = np.einsum("jnm,bnj->bmj", W_R, dZ)
    else:
        dW_C = np.einsum("bnd,bmd->nm", dZ, S)
        dW_R = np.einsum("bnd,bmd->nm", dZ, H_prev)
        db_C = dZ.sum(axis=(0, 2))
        dS = matmul(W_C.T, dZ)
        dH = matmul(W_R.T, dZ)
    # product rule through H ∘ H
    return dW_C, dW_R, db_C, dH + 2.0 * H_prev * dS


class SepCrossModel(CtrModel):
    kind = ModelKind.SEPCROSS

    def __init__(self, config: ModelConfig):
        super().__init__(config)
        if config.num_fields < 1:
            raise ConfigError("the cross network needs at least one field (categorical or dense row)")

    def init_params(self, rng: SeededRng) -> ModelParams:
        """Embeddings ~ N(0, 1/sqrt(d)); W_C, W_R ~ N(0, 1/sqrt(N)); b_C, V, b zero."""
        cfg = self.config
        n, d = cfg.num_fields, cfg.embed_dim
        groups = init_embeddings(cfg, rng)
        layer_shape = (d, n, n) if cfg.separated else (n, n)
        bias_shape = (d, n) if cfg.separated else (n,)
        for i in range(cfg.cross_layers):
            w_c, w_r, b_c = layer_names(i)
            groups[w_c] = rng.normal(1.0 / np.sqrt(n), layer_shape)
            groups[w_r] = rng.normal(1.0 / np.sqrt(n), layer_shape)
            groups[b_c] = np.zeros(bias_shape)
        groups["head.V"] = np.zeros(d)
        groups["head.b"] = np.zeros(1)
        sparse = [name for name in groups if name.startswith("emb.")]
        return ModelParams(groups, sparse)

    def forward(self, examples: ExampleSet, params: ModelParams) -> ForwardTrace:
        return model_forward(examples, params, self.config)

    def backward(self, trace: ForwardTrace, examples: ExampleSet, params: ModelParams,
                 scale: float = 1.0) -> Gradients:
        return model_backward(trace, examples, params, self.config, scale)

    def parameter_count(self) -> int:
        cfg = self.config
        n, d = cfg.num_fields, cfg.embed_dim
        per_layer = 2 * n * n + n
        if cfg.separated:
            per_layer *= d
        return embedding_parameter_count(cfg) + cfg.cross_layers * per_layer + d + 1


def model_forward(examples: ExampleSet, params: ModelParams, config: ModelConfig) -> ForwardTrace:
    """embed -> L cross layers -> sum pool -> head, keeping every intermediate."""
    hidden = [embed_forward(examples, params, config)]
    pre = []
    for i in range(config.cross_layers):
        w_c, w_r, b_c = layer_names(i)
        Z = cross_layer_preactivation(hidden[-1], params[w_c], params[w_r], params[b_c])
        pre.append(Z)
        hidden.append(activation(Z, config.cross_activation))
    pooled = sum_pool(hidden[-1])
    logit, probability = predict_head(pooled, params["head.V"], params["head.b"][0])
    return ForwardTrace(hidden=hidden, pre_activations=pre, pooled=pooled,
                        logit=np.atleast_1d(logit), probability=np.atleast_1d(probability))


def model_backward(trace: ForwardTrace, examples: ExampleSet, params: ModelParams,
                   config: ModelConfig, scale: float = 1.0) -> Gradients:
    """Exact gradient of scale * sum_b logloss_b; dLoss/dlogit = p - y."""
    B = len(examples)
    if len(trace.hidden) != config.cross_layers + 1 or trace.batch_size != B:
        raise ShapeError(
            f"trace has {len(trace.hidden) - 1} layers / {trace.batch_size} examples, "
            f"expected {config.cross_layers} / {B}"
        )
    if trace.hidden[0].shape != (B, config.num_fields, config.embed_dim):
        raise ShapeError(f"trace H^0 shape {trace.hidden[0].shape} does not match the model")

    g = scale * (trace.probability - examples.labels)
    dense = {
        "head.V": trace.pooled.T @ g,
        "head.b": np.array([g.sum()]),
    }
    d_pooled = g[:, None] * params["head.V"][None, :]
    dH = np.repeat(d_pooled[:, None, :], config.num_fields, axis=1)

    for i in reversed(range(config.cross_layers)):
        w_c, w_r, b_c = layer_names(i)
        dW_C, dW_R, db_C, dH = _cross_layer_backward(
            dH, trace.pre_activations[i], trace.hidden[i], params[w_c], params[w_r], config.cross_activation
        )
        dense[w_c], dense[w_r], dense[b_c] = dW_C, dW_R, db_C

    emb_dense, emb_sparse = embed_backward(dH, examples, config)
    dense.update(emb_dense)
    return Gradients(dense, emb_sparse)
