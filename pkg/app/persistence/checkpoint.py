"""Binary checkpoint codec.

Layout (all little-endian):
    magic      4 bytes  b"SECN"
    version    u32
    header_len u32, then header_len bytes of compact JSON:
               {"kind", "model_config", "seed", "valid_frac", "num_dense",
                "params": [{"name", "shape", "sparse"}]}
               valid_frac is the held-out fraction of the seeded in-file split,
               or null when a separate validation file was used
    DenseStats mean, then std, as float64 arrays of num_dense values
    parameters float64 arrays in header order, row-major
    checksum   u64 FNV-1a over every preceding byte
"""

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from pydantic import ValidationError

from app.data.hashing import FNV64_OFFSET, fnv1a64
from app.errors import CheckpointError
from app.models.params import ModelParams
from app.schemas.dataset import DenseStats
from app.schemas.model_config import ModelConfig

logger = logging.getLogger(__name__)

MAGIC = b"SECN"
FORMAT_VERSION = 1
_F64 = np.dtype("<f8")
CHECKSUM_CHUNK = 16 * 1024 ** 2

PathLike = Union[str, Path]


@dataclass
class Checkpoint:
    model_config: ModelConfig
    stats: DenseStats
    params: ModelParams
    seed: int
    valid_frac: Optional[float] = None
    checksum: int = 0
    version: int = FORMAT_VERSION

    @property
    def kind(self) -> str:
        return self.model_config.kind.value


def checkpoint_checksum(data: bytes, chunk_size: int = CHECKSUM_CHUNK) -> int:
    """FNV-1a of `data`, streamed in chunks with progress logged for large payloads.

    The digest runs byte by byte in Python (roughly 0.2 s per MB).
    """
    view = memoryview(data)
    total = len(view)
    h = FNV64_OFFSET
    for start in range(0, total, chunk_size):
        h = fnv1a64(view[start:start + chunk_size], h)
        if total > chunk_size:
            done = min(start + chunk_size, total)
            logger.info(f"Checksummed {done // 1024 ** 2}/{total // 1024 ** 2} MB ({done / total:.0%})")
    return h


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:

    num_dense = len(checkpoint.stats.mean)
    header = {
        "kind": checkpoint.kind,
        "model_config": checkpoint.model_config.model_dump(mode="json"),
        "seed": checkpoint.seed,
        "valid_frac": checkpoint.valid_frac,
        "num_dense": num_dense,
        "params": [
            {"name": name, "shape": list(value.shape), "sparse": name in checkpoint.params.sparse}
            for name, value in checkpoint.params.items()
        ],
    }
    header_bytes = json.dumps(header, separators=(",", ":")).encode("utf-8")
    parts = [
        MAGIC,
        struct.pack("<II", FORMAT_VERSION, len(header_bytes)),
        header_bytes,
        np.asarray(checkpoint.stats.mean, dtype=_F64).tobytes(),
        np.asarray(checkpoint.stats.std, dtype=_F64).tobytes(),
    ]
    parts.extend(np.ascontiguousarray(value, dtype=_F64).tobytes() for _, value in checkpoint.params.items())
    body = b"".join(parts)
    return body + struct.pack("<Q", checkpoint_checksum(body))


def save_checkpoint(path: PathLike, checkpoint: Checkpoint) -> int:
    """Write the checkpoint; returns its checksum."""
    payload = encode_checkpoint(checkpoint)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(payload)
    checksum = struct.unpack("<Q", payload[-8:])[0]
    checkpoint.checksum = checksum
    logger.info(f"Saved {checkpoint.kind} checkpoint to {path} ({len(payload)} bytes, checksum {checksum:016x})")
    return checksum


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.data):
            raise CheckpointError(f"checkpoint truncated while reading {what}")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def floats(self, count: int, what: str) -> np.ndarray:
        return np.frombuffer(self.take(count * 8, what), dtype=_F64).astype(np.float64)


def _read_header(reader: _Reader) -> Dict[str, Any]:
    if reader.take(4, "magic") != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic bytes)")
    version, header_len = struct.unpack("<II", reader.take(8, "version"))
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    try:
        return json.loads(reader.take(header_len, "header").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"unreadable checkpoint header: {e}") from e


def decode_checkpoint(data: bytes) -> Checkpoint:
    if len(data) < len(MAGIC) + 16:
        raise CheckpointError("checkpoint truncated")
    body, (stored,) = data[:-8], struct.unpack("<Q", data[-8:])
    actual = checkpoint_checksum(body)
    if actual != stored:
        raise CheckpointError(f"checksum mismatch: stored {stored:016x}, computed {actual:016x}")

    reader = _Reader(body)
    header = _read_header(reader)
    try:
        model_config = ModelConfig.model_validate(header["model_config"])
        num_dense = int(header["num_dense"])
        stats = DenseStats(mean=reader.floats(num_dense, "dense mean").tolist(),
                           std=reader.floats(num_dense, "dense std").tolist())
        groups, sparse = {}, []
        for entry in header["params"]:
            shape = tuple(int(s) for s in entry["shape"])
            size = int(np.prod(shape)) if shape else 1
            groups[entry["name"]] = reader.floats(size, entry["name"]).reshape(shape)
            if entry["sparse"]:
                sparse.append(entry["name"])
        seed = int(header["seed"])
        valid_frac = header.get("valid_frac")
        valid_frac = None if valid_frac is None else float(valid_frac)
    except (KeyError, TypeError, ValueError, ValidationError) as e:
        raise CheckpointError(f"malformed checkpoint header: {e}") from e
    if reader.offset != len(body):
        raise CheckpointError(f"{len(body) - reader.offset} unexpected trailing bytes in checkpoint")
    if header.get("kind") != model_config.kind.value:
        raise CheckpointError(f"kind tag {header.get('kind')!r} disagrees with config {model_config.kind.value!r}")
    return Checkpoint(model_config=model_config, stats=stats, params=ModelParams(groups, sparse),
                      seed=seed, valid_frac=valid_frac, checksum=stored, version=FORMAT_VERSION)


def load_checkpoint(path: PathLike) -> Checkpoint:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    checkpoint = decode_checkpoint(data)
    logger.info(f"Loaded {checkpoint.kind} checkpoint from {path}")
    return checkpoint


def summarize_checkpoint(checkpoint: Checkpoint) -> Dict[str, Any]:
    """Structure only: no parameter values."""
    cfg = checkpoint.model_config
    summary: Dict[str, Any] = {
        "kind": checkpoint.kind,
        "version": checkpoint.version,
        "schema": cfg.dataset.describe(),
        "seed": checkpoint.seed,
        "checksum": f"{checkpoint.checksum:016x}",
        "parameter_count": checkpoint.params.num_parameters(),
        "shapes": {name: list(shape) for name, shape in checkpoint.params.shapes().items()},
    }
    if cfg.kind.value == "fm":
        summary["k"] = cfg.embed_dim
    else:
        summary.update(embed_dim=cfg.embed_dim, num_fields=cfg.num_fields)
        if cfg.kind.value == "sepcross":
            summary.update(cross_layers=cfg.cross_layers, separated=cfg.separated,
                           activation=cfg.cross_activation.value)
    return summary
