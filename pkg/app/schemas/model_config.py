from enum import Enum

from pydantic import BaseModel, Field, field_validator

from app.core.activations import Activation
from app.schemas.dataset import DatasetSchema


class ModelKind(str, Enum):
    SEPCROSS = "sepcross"
    FM = "fm"
    ATTN = "attn"


class OptimizerKind(str, Enum):
    SGD = "sgd"
    ADAM = "adam"


class ModelConfig(BaseModel):
    """Architecture of one model; the FM uses embed_dim as its latent size k."""

    kind: ModelKind = ModelKind.SEPCROSS
    dataset: DatasetSchema = Field(default_factory=DatasetSchema.uniform)
    embed_dim: int = Field(8, ge=1)
    cross_layers: int = Field(2, ge=0, description="0 degenerates to pooled embeddings + head")
    separated: bool = Field(True, description="Per-embedding-dimension cross matrices")
    cross_activation: Activation = Activation.IDENTITY
    include_dense_as_field: bool = True

    @field_validator("cross_activation")
    @classmethod
    def _cross_activation(cls, value: Activation) -> Activation:
        if value not in (Activation.IDENTITY, Activation.RELU):
            raise ValueError(f"cross activation must be identity or relu, got {value.value}")
        return value

    @property
    def has_dense_field(self) -> bool:
        return self.include_dense_as_field and self.dataset.num_dense > 0

    @property
    def num_fields(self) -> int:
        """N: rows entering the cross/attention stack."""
        return self.dataset.num_categorical + (1 if self.has_dense_field else 0)


class TrainConfig(BaseModel):
    learning_rate: float = Field(1e-3, ge=0.0)
    epochs: int = Field(10, ge=1)
    batch_size: int = Field(256, ge=1)
    optimizer: OptimizerKind = OptimizerKind.ADAM
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    epsilon: float = Field(1e-8, gt=0.0)
    l2: float = Field(1e-6, ge=0.0)
    seed: int = Field(42, ge=0)
    early_stop_patience: int = Field(2, ge=0, description="0 disables early stopping")
