from typing import Dict, Type

from app.models.attention import AttentionModel
from app.models.base import CtrModel
from app.models.fm import FmModel
from app.models.sepcross import SepCrossModel
from app.schemas.model_config import ModelConfig, ModelKind

MODELS: Dict[ModelKind, Type[CtrModel]] = {
    ModelKind.SEPCROSS: SepCrossModel,
    ModelKind.FM: FmModel,
    ModelKind.ATTN: AttentionModel,
}


def build_model(config: ModelConfig) -> CtrModel:
    return MODELS[config.kind](config)
