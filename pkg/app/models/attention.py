"""Self-attention interaction variant.

Single-head scaled dot-product attention over the N field rows of H^0:
softmax((H Q)(H K)^T / sqrt(d_a)) . (H W_v), with d_a = d, followed by the same
sum pooling and sigmoid head as the cross network.
"""

from typing import Dict

import numpy as np

from app.core.matrix import matmul, transpose_last
from app.core.rng import SeededRng
from app.data.examples import ExampleSet
from app.errors import ConfigError, ShapeError
from app.models.base import CtrModel, ForwardTrace
from app.models.embedding import embed_backward, embed_forward, embedding_parameter_count, init_embeddings
from app.models.params import Gradients, ModelParams
from app.models.sepcross import predict_head, sum_pool
from app.schemas.model_config import ModelKind


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=-1, keepdims=True)


def attention_weights(H: np.ndarray, Q: np.ndarray, K: np.ndarray) -> np.ndarray:
    """Row-stochastic (…, N, N) attention matrix."""
    if Q.shape != K.shape or H.shape[-1] != Q.shape[0]:
        raise ShapeError(f"attention shapes H{H.shape} Q{Q.shape} K{K.shape} do not fit")
    scale = 1.0 / np.sqrt(Q.shape[1])
    return softmax(matmul(matmul(H, Q), transpose_last(matmul(H, K))) * scale)


def attention_forward(H: np.ndarray, Q: np.ndarray, K: np.ndarray, W_v: np.ndarray) -> Dict[str, np.ndarray]:
    """Returns the output (…, N, d_a) under "out" plus the intermediates backprop needs."""
    if W_v.shape[0] != H.shape[-1]:
        raise ShapeError(f"value projection {W_v.shape} does not fit H{H.shape}")
    queries, keys, values = matmul(H, Q), matmul(H, K), matmul(H, W_v)
    weights = softmax(matmul(queries, transpose_last(keys)) / np.sqrt(Q.shape[1]))
    return {"queries": queries, "keys": keys, "values": values,
            "weights": weights, "out": matmul(weights, values)}


class AttentionModel(CtrModel):
    kind = ModelKind.ATTN

    def __init__(self, config):
        super().__init__(config)
        if config.num_fields < 1:
            raise ConfigError("the attention model needs at least one field")

    def init_params(self, rng: SeededRng) -> ModelParams:
        d = self.config.embed_dim
        groups = init_embeddings(self.config, rng)
        for name in ("attn.Q", "attn.K", "attn.W_v"):
            groups[name] = rng.normal(1.0 / np.sqrt(d), (d, d))
        groups["head.V"] = np.zeros(d)
        groups["head.b"] = np.zeros(1)
        return ModelParams(groups, [name for name in groups if name.startswith("emb.")])

    def forward(self, examples: ExampleSet, params: ModelParams) -> ForwardTrace:
        h0 = embed_forward(examples, params, self.config)
        cache = attention_forward(h0, params["attn.Q"], params["attn.K"], params["attn.W_v"])
        pooled = sum_pool(cache["out"])
        logit, probability = predict_head(pooled, params["head.V"], params["head.b"][0])
        return ForwardTrace(hidden=[h0], pre_activations=[], pooled=pooled,
                            logit=np.atleast_1d(logit), probability=np.atleast_1d(probability), extras=cache)

    def backward(self, trace: ForwardTrace, examples: ExampleSet, params: ModelParams,
                 scale: float = 1.0) -> Gradients:
        if trace.batch_size != len(examples) or "weights" not in trace.extras:
            raise ShapeError("trace was not produced by the attention model on these examples")
        Q, K, W_v = params["attn.Q"], params["attn.K"], params["attn.W_v"]
        h0 = trace.hidden[0]
        c = trace.extras
        g = scale * (trace.probability - examples.labels)

        dense = {"head.V": trace.pooled.T @ g, "head.b": np.array([g.sum()])}
        d_out = np.repeat((g[:, None] * params["head.V"][None, :])[:, None, :], h0.shape[1], axis=1)

        A = c["weights"]
        d_weights = matmul(d_out, transpose_last(c["values"]))
        d_values = matmul(transpose_last(A), d_out)
        d_scores = A * (d_weights - (d_weights * A).sum(axis=-1, keepdims=True)) / np.sqrt(Q.shape[1])
        d_queries = matmul(d_scores, c["keys"])
        d_keys = matmul(transpose_last(d_scores), c["queries"])

        dense["attn.Q"] = np.einsum("bnd,bna->da", h0, d_queries)
        dense["attn.K"] = np.einsum("bnd,bna->da", h0, d_keys)
        dense["attn.W_v"] = np.einsum("bnd,bna->da", h0, d_values)
        d_h0 = matmul(d_queries, Q.T) + matmul(d_keys, K.T) + matmul(d_values, W_v.T)

        emb_dense, emb_sparse = embed_backward(d_h0, examples, self.config)
        dense.update(emb_dense)
        return Gradients(dense, emb_sparse)

    def parameter_count(self) -> int:
        d = self.config.embed_dim
        return embedding_parameter_count(self.config) + 3 * d * d + d + 1
