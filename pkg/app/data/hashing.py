"""FNV-1a hashing of categorical tokens into per-field buckets."""

import struct
from functools import lru_cache
from typing import Optional

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

MISSING_BUCKET = 0


def fnv1a64(data: bytes, h: int = FNV64_OFFSET) -> int:
    """64-bit FNV-1a; pass a previous digest as `h` to continue a stream."""
    for byte in data:
        h = ((h ^ byte) * FNV64_PRIME) & _MASK64
    return h


@lru_cache(maxsize=1 << 20)
def _bucket(field_index: int, token: bytes, buckets: int) -> int:
    digest = fnv1a64(struct.pack("<I", field_index) + token)
    return 1 + digest % (buckets - 1)


def hash_categorical(field_index: int, token: Optional[bytes], buckets: int) -> int:
    """Bucket of a token within its field; missing tokens go to bucket 0.

    The hash is salted with the field index (4 little-endian bytes) so equal
    tokens in different fields land independently. Hashed tokens always fall in
    [1, buckets).
    """
    if not token:
        return MISSING_BUCKET
    if buckets < 2:
        raise ValueError(f"need at least 2 buckets, got {buckets}")
    return _bucket(field_index, token, buckets)
