"""Binary checkpoint format.

    "QBCK" | version u32 | count u32 | parameter records | count u32 |
    optimizer records | config length u32 | RunConfig text (UTF-8)

A record is: name length u32, name bytes, rank u32, dims u32 x rank, then the
payload as little-endian float32. All integers are little-endian.
"""
import os
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Dict, Mapping, Union

import numpy as np

from objects.errors import DataError

MAGIC = b"QBCK"
VERSION = 1
_U32 = struct.Struct("<I")
_F32 = np.dtype("<f4")


@dataclass
class Checkpoint:
    params: Dict[str, np.ndarray] = field(default_factory=dict)
    optimizer: Dict[str, np.ndarray] = field(default_factory=dict)
    run_config: str = ""


def _write_u32(handle: BinaryIO, value: int) -> None:
    handle.write(_U32.pack(value))


def _read_exact(handle: BinaryIO, size: int) -> bytes:
    data = handle.read(size)
    if len(data) != size:
        raise DataError("checkpoint is truncated")
    return data


def _read_u32(handle: BinaryIO) -> int:
    return _U32.unpack(_read_exact(handle, 4))[0]


def _write_records(handle: BinaryIO, records: Mapping[str, np.ndarray]) -> None:
    _write_u32(handle, len(records))
    for name, array in records.items():
        encoded = name.encode("utf-8")
        array = np.asarray(array)
        _write_u32(handle, len(encoded))
        handle.write(encoded)
        _write_u32(handle, array.ndim)
        for dim in array.shape:
            _write_u32(handle, dim)
        handle.write(np.ascontiguousarray(array, dtype=_F32).tobytes())


def _read_records(handle: BinaryIO) -> Dict[str, np.ndarray]:
    records = {}
    for _ in range(_read_u32(handle)):
        name = _read_exact(handle, _read_u32(handle)).decode("utf-8")
        shape = tuple(_read_u32(handle) for _ in range(_read_u32(handle)))
        count = int(np.prod(shape, dtype=np.int64))
        payload = _read_exact(handle, count * _F32.itemsize)
        records[name] = np.frombuffer(payload, dtype=_F32).reshape(shape).astype(np.float32)
    return records


def save_checkpoint(path: Union[str, os.PathLike], checkpoint: Checkpoint) -> None:
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        _write_u32(handle, VERSION)
        _write_records(handle, checkpoint.params)
        _write_records(handle, checkpoint.optimizer)
        text = checkpoint.run_config.encode("utf-8")
        _write_u32(handle, len(text))
        handle.write(text)


def load_checkpoint(path: Union[str, os.PathLike]) -> Checkpoint:
    try:
        with open(path, "rb") as handle:
            if handle.read(4) != MAGIC:
                raise DataError(f"{path} is not a QBCK checkpoint")
            version = _read_u32(handle)
            if version != VERSION:
                raise DataError(f"unsupported checkpoint version {version}")
            params = _read_records(handle)
            optimizer = _read_records(handle)
            run_config = _read_exact(handle, _read_u32(handle)).decode("utf-8")
    except OSError as e:
        raise DataError(f"cannot read checkpoint {path}: {e}") from e
    return Checkpoint(params=params, optimizer=optimizer, run_config=run_config)
