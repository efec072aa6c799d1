import os
import typing
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from dotenv import dotenv_values
from pydantic import ValidationError

from app.errors import ConfigError
from app.schemas.dataset import CRITEO_NUM_CATEGORICAL, CRITEO_NUM_DENSE, DEFAULT_BUCKETS, DatasetSchema
from app.schemas.model_config import ModelConfig, TrainConfig

# Constants
ENV_PREFIX = "SECN_"
DEFAULT_VALID_FRACTION = 0.2
DEFAULT_CHECKPOINT = "model.secn"

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_value(name: str, field_type: Any, raw: Any) -> Any:
    """Coerce a string from a file or the environment to the field's type."""
    if not isinstance(raw, str):
        return raw
    if typing.get_origin(field_type) is typing.Union:
        if raw.strip().lower() in ("", "none"):
            return None
        field_type = next(arg for arg in typing.get_args(field_type) if arg is not type(None))
    text = raw.strip()
    try:
        if field_type is bool:
            if text.lower() in _TRUE:
                return True
            if text.lower() in _FALSE:
                return False
            raise ValueError(text)
        if field_type is int:
            return int(text)
        if field_type is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"invalid value for {name}: {raw!r}") from None
    return text


@dataclass
class RunConfig:
    """Everything one command needs: schema, model, training and paths.

    Sources, lowest precedence first: defaults, `key = value` config file,
    SECN_* environment variables, command-line flags.
    """

    # Data
    train: Optional[str] = None
    valid: Optional[str] = None
    valid_frac: float = DEFAULT_VALID_FRACTION
    schema_dense: int = CRITEO_NUM_DENSE
    schema_cats: int = CRITEO_NUM_CATEGORICAL
    buckets: int = DEFAULT_BUCKETS

    # Model
    model: str = "sepcross"
    dim: int = 8
    layers: int = 2
    separated: bool = True
    activation: str = "identity"
    dense_field: bool = True

    # Training
    lr: float = 1e-3
    epochs: int = 10
    batch: int = 256
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    l2: float = 1e-6
    seed: int = 42
    patience: int = 2

    # Outputs
    out: str = DEFAULT_CHECKPOINT
    metrics_out: Optional[str] = None

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def _coerce(cls, values: Mapping[str, Any], source: str) -> Dict[str, Any]:
        types = {f.name: f.type for f in fields(cls)}
        out = {}
        for key, raw in values.items():
            name = key.strip().lower().replace("-", "_")
            if name not in types:
                raise ConfigError(f"unknown setting {key!r} in {source}")
            out[name] = _parse_value(name, types[name], raw)
        return out

    @classmethod
    def from_file(cls, path: str) -> Dict[str, Any]:
        """Read `key = value` lines (# comments allowed)."""
        if not Path(path).is_file():
            raise ConfigError(f"config file not found: {path}")
        return cls._coerce(dotenv_values(path), path)

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
        environ = os.environ if environ is None else environ
        names = set(cls.field_names())
        picked = {
            key[len(ENV_PREFIX):]: value
            for key, value in environ.items()
            if key.startswith(ENV_PREFIX) and key[len(ENV_PREFIX):].lower() in names
        }
        return cls._coerce(picked, "environment")

    @classmethod
    def load(cls, flags: Optional[Mapping[str, Any]] = None, config_file: Optional[str] = None,
             environ: Optional[Mapping[str, str]] = None) -> "RunConfig":
        values: Dict[str, Any] = {}
        if config_file:
            values.update(cls.from_file(config_file))
        values.update(cls.from_env(environ))
        names = set(cls.field_names())
        values.update({k: v for k, v in (flags or {}).items() if k in names and v is not None})
        return cls(**values)

    def dataset_schema(self) -> DatasetSchema:
        try:
            return DatasetSchema.uniform(self.schema_dense, self.schema_cats, self.buckets)
        except ValidationError as e:
            raise ConfigError(f"invalid schema: {_first_error(e)}") from e

    def model_config(self, schema: Optional[DatasetSchema] = None) -> ModelConfig:
        try:
            return ModelConfig(
                kind=self.model, dataset=schema or self.dataset_schema(), embed_dim=self.dim,
                cross_layers=self.layers, separated=self.separated, cross_activation=self.activation,
                include_dense_as_field=self.dense_field,
            )
        except ValidationError as e:
            raise ConfigError(f"invalid model config: {_first_error(e)}") from e

    def train_config(self) -> TrainConfig:
        try:
            return TrainConfig(
                learning_rate=self.lr, epochs=self.epochs, batch_size=self.batch, optimizer=self.optimizer,
                beta1=self.beta1, beta2=self.beta2, epsilon=self.epsilon, l2=self.l2, seed=self.seed,
                early_stop_patience=self.patience,
            )
        except ValidationError as e:
            raise ConfigError(f"invalid training config: {_first_error(e)}") from e

    def metrics_path(self) -> Path:
        if self.metrics_out:
            return Path(self.metrics_out)
        return Path(self.out).with_suffix(".metrics.csv")

    def validate_for_training(self) -> None:
        """Check inputs and output locations before any long-running work."""
        if not self.train:
            raise ConfigError("--train is required")
        _require_readable(self.train)
        if self.valid:
            _require_readable(self.valid)
        elif not 0.0 < self.valid_frac < 1.0:
            raise ConfigError(f"--valid-frac must lie in (0, 1), got {self.valid_frac}")
        for path in (Path(self.out), self.metrics_path()):
            require_writable(path)
        self.dataset_schema()
        self.model_config()
        self.train_config()


def _first_error(error: ValidationError) -> str:
    first = error.errors()[0]
    where = ".".join(str(p) for p in first.get("loc", ()))
    return f"{where}: {first.get('msg')}" if where else first.get("msg", str(error))


def _require_readable(path: str) -> None:
    p = Path(path)
    if not p.is_file() or not os.access(p, os.R_OK):
        raise ConfigError(f"cannot read {path}")


def require_writable(path: Path) -> None:
    parent = path.parent if str(path.parent) else Path(".")
    try:
        parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"cannot create directory {parent}: {e}") from e
    if not os.access(parent, os.W_OK):
        raise ConfigError(f"cannot write to {parent}")
