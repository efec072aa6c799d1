"""Criteo TSV ingestion and export.

One record per line: label "0"/"1", then num_dense integer columns, then
num_categorical token columns, separated by tabs. Any column may be empty.
"""

import logging
from pathlib import Path
from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np

from app.data.examples import ExampleSet
from app.data.hashing import MISSING_BUCKET, hash_categorical
from app.data.preprocess import transform_dense_rows
from app.errors import CriteoParseError, DataError
from app.schemas.dataset import DatasetSchema

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class RawRecord(NamedTuple):
    label: int
    dense: List[Optional[int]]
    tokens: List[Optional[bytes]]


def parse_criteo_line(line: str, schema: DatasetSchema, line_number: int = 0) -> RawRecord:
    """Parse one TSV line; raises CriteoParseError on a wrong field count or label."""
    fields = line.rstrip("\r\n").split("\t")
    expected = 1 + schema.num_dense + schema.num_categorical
    if len(fields) != expected:
        raise CriteoParseError(line_number, f"expected {expected} fields, got {len(fields)}")

    label_text = fields[0].strip()
    if label_text not in ("0", "1"):
        raise CriteoParseError(line_number, f"label must be 0 or 1, got {label_text!r}")

    dense: List[Optional[int]] = []
    for j, text in enumerate(fields[1:1 + schema.num_dense]):
        text = text.strip()
        if not text:
            dense.append(None)
            continue
        try:
            dense.append(int(text))
        except ValueError:
            raise CriteoParseError(line_number, f"dense column {j} is not an integer: {text!r}") from None

    tokens: List[Optional[bytes]] = [
        text.encode("utf-8") if text else None for text in fields[1 + schema.num_dense:]
    ]
    return RawRecord(label=int(label_text), dense=dense, tokens=tokens)


def read_criteo_file(path: PathLike, schema: DatasetSchema) -> Tuple[List[RawRecord], List[CriteoParseError]]:
    """Parse a whole file, collecting malformed lines instead of stopping at them.

    Lines are decoded one at a time, so a line that is not valid UTF-8 is
    rejected on its own like any other malformed line.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"data file not found: {path}")

    records: List[RawRecord] = []
    rejects: List[CriteoParseError] = []
    try:
        with open(path, "rb") as f:
            for line_number, raw in enumerate(f, start=1):
                try:
                    records.append(parse_criteo_line(_decode_line(raw, line_number), schema, line_number))
                except CriteoParseError as e:
                    logger.warning(f"Rejected {path.name}:{e}")
                    rejects.append(e)
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e

    logger.info(f"Parsed {len(records)} records from {path} ({len(rejects)} rejected)")
    return records, rejects


def _decode_line(raw: bytes, line_number: int) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise CriteoParseError(line_number, f"invalid UTF-8 at byte {e.start}") from None


def encode_records(records: List[RawRecord], schema: DatasetSchema) -> ExampleSet:
    """Hash tokens and log-transform dense columns (standardisation comes later)."""
    n = len(records)
    labels = np.fromiter((r.label for r in records), dtype=np.float64, count=n)
    dense = transform_dense_rows([r.dense for r in records], schema.num_dense)
    cats = np.zeros((n, schema.num_categorical), dtype=np.int64)
    for i, record in enumerate(records):
        for j, token in enumerate(record.tokens):
            cats[i, j] = hash_categorical(j, token, schema.buckets_per_field[j])
    return ExampleSet(labels=labels, dense=dense, cats=cats)


def load_criteo(path: PathLike, schema: DatasetSchema) -> Tuple[ExampleSet, List[CriteoParseError]]:
    records, rejects = read_criteo_file(path, schema)
    if not records:
        raise DataError(f"no valid records in {path}")
    return encode_records(records, schema), rejects


def write_criteo_file(path: PathLike, examples: ExampleSet) -> None:
    """Export examples as Criteo TSV.

    Dense columns are written as the integers whose log transform they hold
    (round(e^x - 1)), so only un-standardised sets round-trip. Bucket ids are
    rendered as decimal tokens; bucket 0 is written as an empty (missing) field.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw_dense = np.rint(np.expm1(np.maximum(examples.dense, 0.0))).astype(np.int64)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for i in range(len(examples)):
            cols = [str(int(examples.labels[i]))]
            cols.extend(str(v) for v in raw_dense[i])
            cols.extend("" if b == MISSING_BUCKET else str(b) for b in examples.cats[i])
            f.write("\t".join(cols) + "\n")
    logger.info(f"Wrote {len(examples)} records to {path}")
