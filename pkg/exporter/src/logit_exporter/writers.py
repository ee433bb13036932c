"""Binary writers for the toolkit's logit/label wire format.

Logit file: magic ``CPLT``, u32 version=1, u64 N, u32 K, N*K float32
row-major (20 + 4*N*K bytes). Label file: magic ``CPLB``, the same header,
N u32 labels (20 + 4*N bytes). Little-endian throughout.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<IQI")
VERSION = 1


def write_logit_file(path: str | Path, logits: np.ndarray) -> None:
    logits = np.ascontiguousarray(logits, dtype="<f4")
    n, k = logits.shape
    Path(path).write_bytes(b"CPLT" + _HEADER.pack(VERSION, n, k) + logits.tobytes())


def write_label_file(path: str | Path, labels: np.ndarray, k: int) -> None:
    labels = np.ascontiguousarray(labels, dtype="<u4")
    Path(path).write_bytes(
        b"CPLB" + _HEADER.pack(VERSION, labels.shape[0], k) + labels.tobytes()
    )
