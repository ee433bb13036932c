"""Loading, validation, splitting, and persistence of logit/label data.

Binary wire format (little-endian):

* logit file:  magic ``CPLT``, u32 version=1, u64 N, u32 K, then N*K float32
  values in row-major order (20 + 4*N*K bytes total)
* label file:  magic ``CPLB``, u32 version=1, u64 N, u32 K, then N u32 labels
  (20 + 4*N bytes total)

The CSV alternative stores one example per row with K separator-delimited
floats (comma or whitespace), and labels as one integer per line.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateSplit,
    IoFailure,
    LabelOutOfRange,
    MalformedFile,
    NonFiniteLogit,
)

MAGIC_LOGITS = b"CPLT"
MAGIC_LABELS = b"CPLB"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<IQI")  # version, N, K


@dataclass(frozen=True)
class LogitDataset:
    """Immutable N x K matrix of raw logits plus N true labels."""

    logits: np.ndarray
    labels: np.ndarray

    @property
    def n_examples(self) -> int:
        return self.logits.shape[0]

    @property
    def n_labels(self) -> int:
        return self.logits.shape[1]

    @classmethod
    def from_arrays(cls, logits: np.ndarray, labels: np.ndarray) -> "LogitDataset":
        """Validate raw arrays and freeze them into a dataset.

        Raises ``MalformedFile`` for bad shapes, ``NonFiniteLogit`` for
        NaN/inf entries, and ``LabelOutOfRange`` for labels outside [0, K).
        """
        logits = np.ascontiguousarray(logits, dtype=np.float64)
        labels = np.ascontiguousarray(labels, dtype=np.int64)
        if logits.ndim != 2:
            raise MalformedFile(f"logits must be 2-D, got shape {logits.shape}")
        n, k = logits.shape
        if n < 1:
            raise MalformedFile("dataset must contain at least one example")
        if k < 2:
            raise MalformedFile(f"dataset must have at least two labels, got K={k}")
        if labels.shape != (n,):
            raise MalformedFile(
                f"labels shape {labels.shape} does not match {n} examples"
            )
        if not np.isfinite(logits).all():
            raise NonFiniteLogit("logits contain NaN or infinite values")
        if labels.size and (labels.min() < 0 or labels.max() >= k):
            bad = labels[(labels < 0) | (labels >= k)][0]
            raise LabelOutOfRange(f"label {bad} outside [0, {k})")
        logits.setflags(write=False)
        labels.setflags(write=False)
        return cls(logits=logits, labels=labels)


@dataclass(frozen=True)
class SplitSpec:
    """Deterministic calibration/validation split request.

    Identical (seed, trial_index, N) always produce identical partitions;
    the shuffle uses a counter-based generator keyed on both values so that
    trials are reproducible independently of iteration order.
    """

    calibration_fraction: float
    seed: int = 0
    trial_index: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.calibration_fraction < 1.0:
            raise ValueError(
                f"calibration_fraction must lie in (0, 1), got {self.calibration_fraction}"
            )
        if self.seed < 0 or self.trial_index < 0:
            raise ValueError("seed and trial_index must be non-negative")


@dataclass(frozen=True)
class SplitIndices:
    """Disjoint index vectors whose union covers 0..N-1 exactly once."""

    calibration: np.ndarray
    validation: np.ndarray


def split_rng(seed: int, trial_index: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for one (seed, trial) unit of work."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(trial_index, stream))
    return np.random.Generator(np.random.Philox(ss))


def split(dataset: LogitDataset, spec: SplitSpec) -> SplitIndices:
    """Partition example indices into calibration and validation sides.

    The calibration side receives round(N * calibration_fraction) examples,
    where round(x) = floor(x + 0.5). Raises ``DegenerateSplit`` when either
    side would be empty.
    """
    n = dataset.n_examples
    n_cal = int(math.floor(n * spec.calibration_fraction + 0.5))
    if n_cal < 1 or n - n_cal < 1:
        raise DegenerateSplit(
            f"N={n}, fraction={spec.calibration_fraction} leaves an empty side"
        )
    perm = split_rng(spec.seed, spec.trial_index).permutation(n)
    cal = np.sort(perm[:n_cal])
    val = np.sort(perm[n_cal:])
    cal.setflags(write=False)
    val.setflags(write=False)
    return SplitIndices(calibration=cal, validation=val)


# ---------------------------------------------------------------------------
# binary + csv readers/writers
# ---------------------------------------------------------------------------


def _read_header(buf: bytes, magic: bytes, path: Path) -> tuple[int, int, int]:
    if len(buf) < 4 + _HEADER.size:
        raise MalformedFile(f"{path}: file too short for header")
    if buf[:4] != magic:
        raise MalformedFile(f"{path}: bad magic {buf[:4]!r}, expected {magic!r}")
    version, n, k = _HEADER.unpack_from(buf, 4)
    if version != FORMAT_VERSION:
        raise MalformedFile(f"{path}: unsupported version {version}")
    if n < 1:
        raise MalformedFile(f"{path}: N={n} is not a valid example count")
    if k < 2:
        raise MalformedFile(f"{path}: K={k} is not a valid label count")
    return version, n, k


def _detect_format(path: Path) -> str:
    return "csv" if path.suffix.lower() in (".csv", ".txt") else "binary"


def _parse_float_rows(path: Path) -> np.ndarray:
    rows = []
    for line_no, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rows.append([float(tok) for tok in line.replace(",", " ").split()])
        except ValueError as exc:
            raise MalformedFile(f"{path}:{line_no}: {exc}") from exc
    if not rows:
        raise MalformedFile(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise MalformedFile(f"{path}: ragged rows with widths {sorted(widths)}")
    return np.asarray(rows, dtype=np.float64)


def load_logits(
    logits_path: str | Path,
    labels_path: str | Path,
    fmt: str | None = None,
) -> LogitDataset:
    """Load and validate a logit matrix plus its label vector.

    ``fmt`` is ``"binary"`` or ``"csv"``; when None it is inferred from the
    logit file extension (``.csv``/``.txt`` select CSV).
    """
    logits_path = Path(logits_path)
    labels_path = Path(labels_path)
    fmt = fmt or _detect_format(logits_path)
    if fmt == "binary":
        try:
            raw_z = logits_path.read_bytes()
            raw_y = labels_path.read_bytes()
        except OSError as exc:
            raise MalformedFile(str(exc)) from exc
        _, n, k = _read_header(raw_z, MAGIC_LOGITS, logits_path)
        body = raw_z[4 + _HEADER.size :]
        if len(body) != 4 * n * k:
            raise MalformedFile(
                f"{logits_path}: expected {4 * n * k} payload bytes, found {len(body)}"
            )
        logits = np.frombuffer(body, dtype="<f4").reshape(n, k)
        _, n2, k2 = _read_header(raw_y, MAGIC_LABELS, labels_path)
        if (n2, k2) != (n, k):
            raise MalformedFile(
                f"{labels_path}: header (N={n2}, K={k2}) does not match logits (N={n}, K={k})"
            )
        body_y = raw_y[4 + _HEADER.size :]
        if len(body_y) != 4 * n:
            raise MalformedFile(
                f"{labels_path}: expected {4 * n} payload bytes, found {len(body_y)}"
            )
        labels = np.frombuffer(body_y, dtype="<u4").astype(np.int64)
    elif fmt == "csv":
        logits = _parse_float_rows(logits_path)
        label_col = _parse_float_rows(labels_path)
        if label_col.shape[1] != 1:
            raise MalformedFile(f"{labels_path}: labels must be one integer per line")
        labels = label_col[:, 0]
        if not np.all(labels == np.floor(labels)):
            raise MalformedFile(f"{labels_path}: labels must be integers")
        labels = labels.astype(np.int64)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return LogitDataset.from_arrays(np.asarray(logits, dtype=np.float64), labels)


def save_logits(
    dataset: LogitDataset,
    logits_path: str | Path,
    labels_path: str | Path,
    fmt: str | None = None,
) -> None:
    """Write a dataset back out in the binary or CSV wire format."""
    logits_path = Path(logits_path)
    labels_path = Path(labels_path)
    fmt = fmt or _detect_format(logits_path)
    n, k = dataset.logits.shape
    try:
        if fmt == "binary":
            header = _HEADER.pack(FORMAT_VERSION, n, k)
            logits_path.write_bytes(
                MAGIC_LOGITS + header + dataset.logits.astype("<f4").tobytes(order="C")
            )
            labels_path.write_bytes(
                MAGIC_LABELS + header + dataset.labels.astype("<u4").tobytes()
            )
        elif fmt == "csv":
            with logits_path.open("w") as fh:
                for row in dataset.logits:
                    fh.write(",".join(repr(float(v)) for v in row) + "\n")
            with labels_path.open("w") as fh:
                for y in dataset.labels:
                    fh.write(f"{int(y)}\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


# ---------------------------------------------------------------------------
# report persistence
# ---------------------------------------------------------------------------


def _coerce(value: str):
    if value == "":
        return None
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value


def save_report(records: list[dict], path: str | Path, fmt: str | None = None) -> None:
    """Persist a list of flat records as JSON or CSV.

    Floats are written with ``repr`` so every numeric field round-trips at
    full precision. An empty record list produces a valid empty table.
    """
    path = Path(path)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            with path.open("w") as fh:
                json.dump(records, fh, indent=2)
                fh.write("\n")
        elif fmt == "csv":
            with path.open("w", newline="") as fh:
                if not records:
                    return
                writer = csv.writer(fh)
                fields = list(records[0].keys())
                writer.writerow(fields)
                for rec in records:
                    writer.writerow(
                        [
                            ""
                            if rec[f] is None
                            else repr(rec[f])
                            if isinstance(rec[f], float)
                            else rec[f]
                            for f in fields
                        ]
                    )
        else:
            raise ValueError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_report(path: str | Path, fmt: str | None = None) -> list[dict]:
    """Read back a report written by :func:`save_report`."""
    path = Path(path)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    try:
        if fmt == "json":
            with path.open() as fh:
                return json.load(fh)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
        if not rows:
            return []
        header, body = rows[0], rows[1:]
        return [{h: _coerce(v) for h, v in zip(header, row)} for row in body]
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
