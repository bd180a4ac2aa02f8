"""KITTI velodyne ``.bin`` files: headerless little-endian float32 (x, y, z, intensity)."""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from lidarfog.errors import DomainError, MalformedFileError

RECORD_DTYPE = np.dtype("<f4")
RECORD_BYTES = 16


@dataclass(frozen=True)
class CloudFileRecord:
    path: Path
    point_count: int
    checksum: str  # 64-bit blake2b digest of the file bytes, hex


@dataclass(frozen=True)
class SkippedFile:
    path: Path
    reason: str


def checksum_bytes(data):
    return hashlib.blake2b(data, digest_size=8).hexdigest()


def file_checksum(path):
    return checksum_bytes(Path(path).read_bytes())


def _check_size(path, size):
    if size % RECORD_BYTES:
        offset = size - size % RECORD_BYTES
        raise MalformedFileError(
            path, offset, f"{path}: size {size} is not a multiple of {RECORD_BYTES}; trailing bytes start at offset {offset}"
        )


def read_kitti_bin(path):
    """Load a scan as an ``(n, 4)`` float32 array in file order.

    Raises
    ------
    MalformedFileError
        Size not a multiple of 16 bytes; ``offset`` is the first byte of the
        incomplete trailing record.
    OSError
        The path cannot be read.
    """
    path = Path(path)
    data = path.read_bytes()
    _check_size(path, len(data))
    return np.frombuffer(data, dtype=RECORD_DTYPE).reshape(-1, 4).astype(np.float32)


def write_kitti_bin(path, cloud):
    """Write ``cloud`` (``(n, 4)``, any float dtype) as float32 records.

    Non-finite values are rejected before anything is written. Parent
    directories are created.
    """
    path = Path(path)
    arr = np.asarray(cloud)
    if arr.size == 0:
        arr = arr.reshape(0, 4)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise DomainError(f"cloud must have shape (n, 4), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{path}: refusing to write non-finite values")
    data = np.ascontiguousarray(arr, dtype=RECORD_DTYPE).tobytes()
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".part")
    try:
        tmp.write_bytes(data)
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
    return CloudFileRecord(path, len(data) // RECORD_BYTES, checksum_bytes(data))


def enumerate_dataset(root, pattern="**/*.bin"):
    """Matching files under ``root`` in lexicographic order of relative path.

    Returns
    -------
    records : list of CloudFileRecord
    skipped : list of SkippedFile
        Files whose size is not a multiple of 16 bytes.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} does not exist or is not a directory")
    matches = sorted(
        (p for p in root.glob(pattern) if p.is_file()),
        key=lambda p: p.relative_to(root).as_posix(),
    )
    records, skipped = [], []
    for p in matches:
        data = p.read_bytes()
        if len(data) % RECORD_BYTES:
            skipped.append(SkippedFile(p, f"size {len(data)} is not a multiple of {RECORD_BYTES}"))
            continue
        records.append(CloudFileRecord(p, len(data) // RECORD_BYTES, checksum_bytes(data)))
    return records, skipped
