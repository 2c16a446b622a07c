"""IDX file parsing (MNIST-style, big-endian).

Layout: u32 magic, one u32 per dimension, then unsigned-byte payload.
Supported magics: 0x00000801 (label vector, 1 dim) and 0x00000803
(image stack, 3 dims). Image bytes are scaled to [0, 1] by division by 255.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from ..errors import IdxParseError
from .dataset import Dataset

MAGIC_LABELS = 0x00000801
MAGIC_IMAGES = 0x00000803

_NDIMS = {MAGIC_LABELS: 1, MAGIC_IMAGES: 3}

DATA_DIR_ENV = "MI_AUDIT_DATA_DIR"


def parse_idx(data: bytes) -> tuple[str, np.ndarray]:
    """Decode one IDX payload.

    Returns ("labels", int array) or ("images", float array in [0, 1] of
    shape (count, rows, cols)). Raises IdxParseError with the offending
    byte offset on malformed input.
    """
    if len(data) < 4:
        raise IdxParseError("truncated header: missing magic", offset=len(data))
    (magic,) = struct.unpack(">I", data[:4])
    if magic not in _NDIMS:
        raise IdxParseError(f"bad magic 0x{magic:08x}", offset=0)
    ndims = _NDIMS[magic]
    header_end = 4 + 4 * ndims
    if len(data) < header_end:
        raise IdxParseError(
            f"truncated header: expected {ndims} dimension fields", offset=len(data)
        )
    dims = struct.unpack(f">{ndims}I", data[4:header_end])
    count = int(np.prod(dims, dtype=np.int64))
    expected_end = header_end + count
    if len(data) < expected_end:
        raise IdxParseError(
            f"payload ends early: expected {count} bytes", offset=len(data)
        )
    if len(data) > expected_end:
        raise IdxParseError("trailing bytes after payload", offset=expected_end)
    payload = np.frombuffer(data, dtype=np.uint8, count=count, offset=header_end)
    if magic == MAGIC_LABELS:
        return "labels", payload.astype(np.int64)
    return "images", payload.reshape(dims).astype(np.float64) / 255.0


def serialize_idx(kind: str, array: np.ndarray) -> bytes:
    """Inverse of parse_idx for valid arrays (round-trip exact)."""
    if kind == "labels":
        magic, dims = MAGIC_LABELS, array.shape
        payload = np.asarray(array, dtype=np.uint8)
    elif kind == "images":
        magic, dims = MAGIC_IMAGES, array.shape
        payload = np.rint(np.asarray(array) * 255.0).astype(np.uint8)
    else:
        raise ValueError(f"kind must be 'labels' or 'images', got {kind!r}")
    if len(dims) != _NDIMS[magic]:
        raise ValueError(f"{kind} array must have {_NDIMS[magic]} dims, got {len(dims)}")
    header = struct.pack(f">I{len(dims)}I", magic, *dims)
    return header + payload.tobytes()


def resolve_data_path(path: str | os.PathLike) -> Path:
    """Resolve a file path, trying MI_AUDIT_DATA_DIR for relative names."""
    p = Path(path)
    if p.is_absolute() or p.exists():
        return p
    base = os.environ.get(DATA_DIR_ENV)
    if base:
        candidate = Path(base) / p
        if candidate.exists():
            return candidate
    return p


def load_idx_dataset(images_path, labels_path, num_classes: int | None = None) -> Dataset:
    """Load a paired (images, labels) IDX file set into a Dataset.

    Images are flattened channel-last to (n, rows, cols, 1).
    """
    kind_i, images = parse_idx(resolve_data_path(images_path).read_bytes())
    kind_l, labels = parse_idx(resolve_data_path(labels_path).read_bytes())
    if kind_i != "images" or kind_l != "labels":
        raise IdxParseError(
            f"expected an images/labels pair, got {kind_i}/{kind_l}", offset=0
        )
    if len(images) != len(labels):
        raise ValueError(f"{len(images)} images but {len(labels)} labels")
    m = int(labels.max()) + 1 if num_classes is None else num_classes
    return Dataset(
        inputs=images[..., None],
        labels=labels,
        num_classes=m,
    )
