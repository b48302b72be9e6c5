"""
Named-tensor checkpoint container

Layout (all integers little-endian uint32):
    b"SPGAN1", version, tensor count,
    then per tensor: name length, UTF-8 name, rank, dims..., float64 values (little-endian)
"""

import logging
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Mapping, Union

import numpy as np

from src.errors import CheckpointError

logger = logging.getLogger(__name__)

MAGIC = b"SPGAN1"
VERSION = 1
_U32 = struct.Struct("<I")


def save_checkpoint(path: Union[str, Path], tensors: Mapping[str, np.ndarray]) -> Path:
    """
    Write named tensors to ``path``

    Args:
        path: Output file (parent directories are created)
        tensors: Ordered name -> array mapping; order is preserved

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    chunks = [MAGIC, _U32.pack(VERSION), _U32.pack(len(tensors))]
    for name, array in tensors.items():
        array = np.asarray(array, dtype="<f8")
        encoded = name.encode("utf-8")
        chunks.append(_U32.pack(len(encoded)))
        chunks.append(encoded)
        chunks.append(_U32.pack(array.ndim))
        chunks.extend(_U32.pack(d) for d in array.shape)
        chunks.append(np.ascontiguousarray(array).tobytes())
    path.write_bytes(b"".join(chunks))
    logger.debug(f"💾 Saved checkpoint with {len(tensors)} tensors: {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """Read a checkpoint written by ``save_checkpoint``"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    blob = path.read_bytes()
    if not blob.startswith(MAGIC):
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    offset = len(MAGIC)

    def read_u32() -> int:
        nonlocal offset
        if offset + 4 > len(blob):
            raise CheckpointError(f"{path}: truncated at byte {offset}")
        (value,) = _U32.unpack_from(blob, offset)
        offset += 4
        return value

    version = read_u32()
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    tensors: Dict[str, np.ndarray] = OrderedDict()
    for _ in range(read_u32()):
        name_len = read_u32()
        if offset + name_len > len(blob):
            raise CheckpointError(f"{path}: tensor name truncated at byte {offset}")
        try:
            name = blob[offset:offset + name_len].decode("utf-8")
        except UnicodeDecodeError as e:
            raise CheckpointError(f"{path}: tensor name at byte {offset} is not UTF-8") from e
        offset += name_len
        dims = tuple(read_u32() for _ in range(read_u32()))
        nbytes = 8 * int(np.prod(dims, dtype=np.int64))
        if offset + nbytes > len(blob):
            raise CheckpointError(f"{path}: tensor '{name}' is truncated")
        tensors[name] = np.frombuffer(blob, dtype="<f8", count=nbytes // 8, offset=offset) \
            .reshape(dims).astype(np.float64)
        offset += nbytes
    if offset != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - offset} trailing bytes")
    return tensors
