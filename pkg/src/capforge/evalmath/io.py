"""Embedding matrix I/O.

Binary format: magic b"CFE1", uint32 B, uint32 D (little-endian), then
B*D row-major float32 values. JSONL interop format: one object per line,
{"id": str, "embedding": [float]}; row order follows file order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import DimensionMismatch, ParseError

MAGIC = b"CFE1"
_HEADER = struct.Struct("<4sII")


def write_matrix(path: str | Path, matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix, dtype=np.float32)
    if matrix.ndim != 2:
        raise DimensionMismatch("matrix must be 2-D")
    b, d = matrix.shape
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, b, d))
        fh.write(np.ascontiguousarray(matrix).tobytes())


def read_matrix(path: str | Path) -> np.ndarray:
    with Path(path).open("rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise ParseError(0, "truncated embedding file header")
        magic, b, d = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ParseError(0, f"bad magic {magic!r}")
        data = np.frombuffer(fh.read(), dtype=np.float32)
    if data.size != b * d:
        raise ParseError(0, f"expected {b * d} floats, found {data.size}")
    return data.reshape(b, d).astype(np.float64)


def write_jsonl(path: str | Path, ids: list[str], matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix)
    if len(ids) != matrix.shape[0]:
        raise DimensionMismatch("one id per row required")
    with Path(path).open("w", encoding="utf-8") as fh:
        for row_id, row in zip(ids, matrix):
            fh.write(json.dumps({"id": row_id, "embedding": row.tolist()}))
            fh.write("\n")


def read_jsonl(path: str | Path) -> tuple[list[str], np.ndarray]:
    ids: list[str] = []
    rows: list[list[float]] = []
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                ids.append(str(obj["id"]))
                rows.append([float(x) for x in obj["embedding"]])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(line_no, str(exc)) from exc
    if rows and any(len(r) != len(rows[0]) for r in rows):
        raise DimensionMismatch("ragged embedding rows")
    matrix = np.array(rows, dtype=np.float64) if rows else np.empty((0, 0))
    return ids, matrix


def load_any(path: str | Path) -> np.ndarray:
    """Load a matrix from either the binary or the JSONL format by extension."""
    path = Path(path)
    if path.suffix == ".jsonl":
        _, matrix = read_jsonl(path)
        return matrix
    return read_matrix(path)
