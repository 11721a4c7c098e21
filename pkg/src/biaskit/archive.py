"""Binary embedding archives and the in-memory context store.

An archive is a directory holding ``manifest.json``::

    {"version": 1, "dim": int, "count": int, "dtype": "f32le",
     "records": [{"row": int, "stimulus": str, "sentence_id": int,
                  "word_count": int}, ...]}

plus ``matrix.bin``: count x dim little-endian 32-bit floats, row-major.
Round trips are bit-exact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ceat import SegmentBin
from .errors import ParseError, ZeroNormError

MANIFEST_NAME = "manifest.json"
MATRIX_NAME = "matrix.bin"
DTYPE_TAG = "f32le"


@dataclass(frozen=True)
class ArchiveRecord:
    """One embedding row: which stimulus, from which sentence, how long."""

    stimulus: str
    sentence_id: int
    word_count: int
    row: int


def write_archive(path: str | Path, vectors: np.ndarray, records) -> None:
    """Write an embedding archive; records may omit row (assigned by position)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    matrix = np.ascontiguousarray(np.asarray(vectors, dtype=np.float32))
    if matrix.ndim != 2:
        raise ParseError("vectors must be a 2-D array")
    count, dim = matrix.shape
    rows = []
    for i, rec in enumerate(records):
        if isinstance(rec, ArchiveRecord):
            stimulus, sentence_id, word_count = rec.stimulus, rec.sentence_id, rec.word_count
        else:
            stimulus, sentence_id, word_count = rec
        rows.append(
            {"row": i, "stimulus": stimulus,
             "sentence_id": int(sentence_id), "word_count": int(word_count)}
        )
    if len(rows) != count:
        raise ParseError(f"{len(rows)} records for {count} matrix rows")
    manifest = {
        "version": 1, "dim": dim, "count": count, "dtype": DTYPE_TAG, "records": rows,
    }
    (path / MANIFEST_NAME).write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    (path / MATRIX_NAME).write_bytes(matrix.astype("<f4", copy=False).tobytes())


def read_archive(path: str | Path) -> tuple[list[ArchiveRecord], np.ndarray]:
    """Read an archive back; validates shape, dtype tag, and row alignment."""
    path = Path(path)
    try:
        manifest = json.loads((path / MANIFEST_NAME).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: bad manifest: {exc}") from exc
    for key in ("version", "dim", "count", "dtype", "records"):
        if key not in manifest:
            raise ParseError(f"{path}: manifest missing {key!r}")
    if manifest["version"] != 1:
        raise ParseError(f"{path}: unsupported archive version {manifest['version']!r}")
    if manifest["dtype"] != DTYPE_TAG:
        raise ParseError(f"{path}: unsupported dtype {manifest['dtype']!r}")
    dim, count = int(manifest["dim"]), int(manifest["count"])
    raw = (path / MATRIX_NAME).read_bytes()
    expected = count * dim * 4
    if len(raw) != expected:
        raise ParseError(f"{path}: matrix holds {len(raw)} bytes, expected {expected}")
    matrix = np.frombuffer(raw, dtype="<f4").reshape(count, dim).copy()
    entries = manifest["records"]
    if len(entries) != count:
        raise ParseError(f"{path}: {len(entries)} manifest records for {count} rows")
    records = []
    for i, entry in enumerate(entries):
        if entry.get("row") != i:
            raise ParseError(f"{path}: record {i} has row {entry.get('row')!r}")
        records.append(
            ArchiveRecord(
                stimulus=entry["stimulus"],
                sentence_id=int(entry["sentence_id"]),
                word_count=int(entry["word_count"]),
                row=i,
            )
        )
    return records, matrix


def stimulus_mean_vectors(records: list[ArchiveRecord], matrix: np.ndarray) -> dict[str, np.ndarray]:
    """Mean-pool all rows of each stimulus; for word-level tests over archives."""
    by_stim: dict[str, list[int]] = {}
    for rec in records:
        by_stim.setdefault(rec.stimulus, []).append(rec.row)
    return {
        stim: matrix[rows].astype(np.float64).mean(axis=0)
        for stim, rows in by_stim.items()
    }


class ContextStore:
    """Read-only per-stimulus view over archive rows, filterable by segment bin."""

    def __init__(self, records: list[ArchiveRecord], matrix: np.ndarray):
        matrix = np.asarray(matrix)
        if matrix.ndim != 2:
            raise ParseError("matrix must be 2-D")
        norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
        if np.any(norms == 0.0):
            bad = int(np.argmin(norms))
            raise ZeroNormError(f"archive row {bad} has zero norm")
        self.records = list(records)
        self.matrix = matrix
        self.unit_vectors = matrix.astype(np.float64) / norms[:, None]
        self._rows: dict[str, list[ArchiveRecord]] = {}
        for rec in self.records:
            self._rows.setdefault(rec.stimulus, []).append(rec)

    @classmethod
    def from_archive(cls, path: str | Path) -> "ContextStore":
        records, matrix = read_archive(path)
        return cls(records, matrix)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def stimuli(self) -> list[str]:
        return list(self._rows)

    def rows_for(self, stimulus: str, seg_bin: SegmentBin | None = None) -> np.ndarray:
        """Row indices for one stimulus, optionally restricted to a bin."""
        recs = self._rows.get(stimulus, [])
        if seg_bin is not None:
            recs = [r for r in recs if seg_bin.contains(r.word_count)]
        return np.asarray([r.row for r in recs], dtype=np.int64)

    def covers(self, surfaces, seg_bin: SegmentBin | None = None) -> bool:
        return all(self.rows_for(s, seg_bin).size > 0 for s in surfaces)
