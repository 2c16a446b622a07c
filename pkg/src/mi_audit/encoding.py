"""Base64 array encoding shared by the model and prepared-variables containers.

Arrays travel as little-endian float64 bytes so files are portable across
platforms and round-trip losslessly.
"""

from __future__ import annotations

import base64

import numpy as np


def array_to_b64(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode("ascii")


def b64_to_array(text: str, shape) -> np.ndarray:
    raw = base64.b64decode(text.encode("ascii"))
    arr = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    expected = int(np.prod(shape)) if len(shape) else 1
    if arr.size != expected:
        raise ValueError(f"encoded array has {arr.size} values, expected {expected}")
    return arr.reshape(tuple(shape))
