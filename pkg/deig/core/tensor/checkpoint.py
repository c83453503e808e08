"""Binary checkpoint codec.

Layout (little-endian)::

    b"DEIGCKPT" | version u32 | count u32
    per entry: name_len u32 | utf-8 name | rank u32 | extents u64 * rank | f8 payload
    crc32 u32 over every preceding byte
"""

import json
import struct
import zlib
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from deig.config.constants import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from deig.core.commons.errors import CheckpointError
from deig.core.commons.logger import get_logger

logger = get_logger(__name__)


def encode_json_entry(document: Any) -> np.ndarray:
    """Store a JSON document as one float64 per UTF-8 byte."""
    raw = json.dumps(document, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return np.frombuffer(raw, dtype=np.uint8).astype(np.float64)


def decode_json_entry(entry: np.ndarray) -> Any:
    values = np.asarray(entry).reshape(-1)
    if np.any((values < 0) | (values > 255) | (values != np.round(values))):
        raise CheckpointError("JSON entry payload is not a byte sequence")
    return json.loads(values.astype(np.uint8).tobytes().decode("utf-8"))


def dumps(entries: Dict[str, np.ndarray]) -> bytes:
    """Serialise named arrays; entry order is the dict order."""
    chunks = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(entries))]
    for name, array in entries.items():
        array = np.ascontiguousarray(array, dtype="<f8")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}Q", *array.shape))
        chunks.append(array.tobytes(order="C"))
    body = b"".join(chunks)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def loads(blob: bytes) -> Dict[str, np.ndarray]:
    """
    Parse a checkpoint blob.

    Raises:
        CheckpointError: On bad magic, unsupported version, truncation or CRC mismatch
    """
    if len(blob) < len(CHECKPOINT_MAGIC) + 12:
        raise CheckpointError("Checkpoint is truncated")
    body, trailer = blob[:-4], blob[-4:]
    (stored_crc,) = struct.unpack("<I", trailer)
    if zlib.crc32(body) & 0xFFFFFFFF != stored_crc:
        raise CheckpointError("Checkpoint CRC32 mismatch")
    if not body.startswith(CHECKPOINT_MAGIC):
        raise CheckpointError("Not a DEIG checkpoint (bad magic)")

    offset = len(CHECKPOINT_MAGIC)
    version, count = struct.unpack_from("<II", body, offset)
    offset += 8
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {version}")

    entries: Dict[str, np.ndarray] = {}
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<I", body, offset)
            offset += 4
            name = body[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<I", body, offset)
            offset += 4
            shape = struct.unpack_from(f"<{rank}Q", body, offset)
            offset += 8 * rank
            size = int(np.prod(shape)) if rank else 1
            payload = body[offset : offset + 8 * size]
            if len(payload) != 8 * size:
                raise CheckpointError(f"Entry {name} is truncated")
            offset += 8 * size
            if name in entries:
                raise CheckpointError(f"Duplicate entry {name}")
            entries[name] = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(shape)
    except struct.error as e:
        raise CheckpointError(f"Checkpoint is truncated: {e}")
    if offset != len(body):
        raise CheckpointError("Trailing bytes after the last entry")
    return entries


def save_checkpoint(path: Union[str, Path], entries: Dict[str, np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(entries))
    logger.info(f"Wrote checkpoint {path} ({len(entries)} entries)")
    return path


def load_checkpoint(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"Checkpoint not found: {path}")
    return loads(path.read_bytes())
