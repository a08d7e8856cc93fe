"""On-disk embedding datasets: a compact binary archive of float32 frame
vectors plus a human-editable JSON manifest describing sequences as row
ranges into the archive.

Archive layout (little-endian):

    bytes 0..4    magic  b"FLWR1"
    byte  5       endianness tag b"<"
    bytes 6..9    dim    uint32
    bytes 10..17  count  uint64
    payload       count * dim float32 values, row-major

Floats are stored in 32-bit precision and widened to float64 in memory
wherever accumulation needs it.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .core import DatasetManifest, SequenceSample

MAGIC = b"FLWR1"
ENDIAN_TAG = b"<"
HEADER = struct.Struct("<5sc I Q")


class FormatError(ValueError):
    """Base class for dataset file problems."""


class BadMagicError(FormatError):
    pass


class TruncatedArchiveError(FormatError):
    pass


class NonFiniteValueError(FormatError):
    pass


class RowRangeError(FormatError):
    pass


class OverlappingRowsError(FormatError):
    pass


class ManifestSchemaError(FormatError):
    pass


def write_archive(path, frames: np.ndarray) -> None:
    """Write a (count, dim) float array as a binary archive."""
    frames = np.asarray(frames, dtype=np.float32)
    if frames.ndim != 2:
        raise ValueError("archive payload must be a 2-D array")
    if frames.size and not np.all(np.isfinite(frames)):
        raise NonFiniteValueError("archive payload contains non-finite values")
    count, dim = frames.shape
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, ENDIAN_TAG, dim, count))
        fh.write(np.ascontiguousarray(frames, dtype="<f4").tobytes())


def read_archive(path) -> np.ndarray:
    """Read a binary archive back as a (count, dim) float32 array."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < HEADER.size:
        if not raw.startswith(MAGIC):
            raise BadMagicError(f"{path}: not an embedding archive")
        raise TruncatedArchiveError(f"{path}: header truncated")
    magic, endian, dim, count = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    if endian != ENDIAN_TAG:
        raise FormatError(f"{path}: unsupported endianness tag {endian!r}")
    if dim < 1 and count > 0:
        raise FormatError(f"{path}: zero dimension with non-zero count")
    expected = HEADER.size + count * dim * 4
    if len(raw) != expected:
        raise TruncatedArchiveError(
            f"{path}: payload is {len(raw) - HEADER.size} bytes, "
            f"expected {count * dim * 4}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=HEADER.size)
    data = data.reshape(count, dim) if count else data.reshape(0, max(dim, 0))
    if data.size and not np.all(np.isfinite(data)):
        raise NonFiniteValueError(f"{path}: non-finite values in payload")
    return data


def write_manifest(manifest: DatasetManifest, out_dir,
                   archive_name: str = "embeddings.bin",
                   manifest_name: str = "manifest.json") -> Path:
    """Serialize a dataset as archive + manifest under ``out_dir``.

    Output bytes are deterministic for a given manifest. Returns the
    manifest path.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    row = 0
    blocks = []
    for s in manifest.sequences:
        n = s.frames.shape[0]
        entries.append({
            "sequence_id": s.sequence_id,
            "object_label": s.true_object,
            "archive_path": archive_name,
            "row_start": row,
            "row_count": n,
            "metadata": s.metadata,
        })
        blocks.append(s.frames)
        row += n
    if blocks:
        payload = np.concatenate(blocks, axis=0)
    else:
        payload = np.zeros((0, 0), dtype=np.float32)
    write_archive(out_dir / archive_name, payload)
    doc = {"version": 1, "sequences": entries}
    manifest_path = out_dir / manifest_name
    with open(manifest_path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return manifest_path


def load_manifest(path) -> DatasetManifest:
    """Load and fully validate a manifest + archive pair.

    Every declared row range must lie inside its archive and ranges within
    one archive must not overlap.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestSchemaError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "sequences" not in doc:
        raise ManifestSchemaError(f"{path}: missing 'sequences'")
    archives: dict[str, np.ndarray] = {}
    claimed: dict[str, list[tuple[int, int, str]]] = {}
    samples = []
    seen_ids = set()
    for entry in doc["sequences"]:
        try:
            seq_id = entry["sequence_id"]
            arch = entry["archive_path"]
            start = int(entry["row_start"])
            count = int(entry["row_count"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestSchemaError(f"{path}: malformed entry: {exc}") from exc
        if seq_id in seen_ids:
            raise ManifestSchemaError(f"{path}: duplicate sequence id {seq_id!r}")
        seen_ids.add(seq_id)
        if arch not in archives:
            archives[arch] = read_archive(path.parent / arch)
            claimed[arch] = []
        data = archives[arch]
        if count < 1 or start < 0 or start + count > data.shape[0]:
            raise RowRangeError(
                f"{path}: sequence {seq_id!r} rows [{start}, {start + count}) "
                f"outside archive of {data.shape[0]} rows"
            )
        for other_start, other_end, other_id in claimed[arch]:
            if start < other_end and other_start < start + count:
                raise OverlappingRowsError(
                    f"{path}: sequences {seq_id!r} and {other_id!r} claim "
                    f"overlapping rows"
                )
        claimed[arch].append((start, start + count, seq_id))
        samples.append(SequenceSample(
            sequence_id=seq_id,
            frames=data[start:start + count],
            true_object=entry.get("object_label"),
            metadata=dict(entry.get("metadata") or {}),
        ))
    return DatasetManifest(samples)


def convert_csv(csv_path, out_dir) -> Path:
    """Convert a frame-per-line CSV export into the archive format.

    Expected columns: ``sequence_id,object_label,v0..v{d-1}``. Rows of one
    sequence must be contiguous. An empty object label means no oracle.
    """
    sequences: list[SequenceSample] = []
    current_id = None
    current_label = None
    rows: list[list[float]] = []
    seen: set[str] = set()

    def flush():
        if current_id is not None:
            if current_id in seen:
                raise ManifestSchemaError(
                    f"{csv_path}: rows of sequence {current_id!r} are not "
                    f"contiguous"
                )
            seen.add(current_id)
            sequences.append(SequenceSample(
                current_id, np.asarray(rows, dtype=np.float64),
                true_object=current_label or None))

    with open(csv_path, newline="") as fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) < 3:
                raise ManifestSchemaError(
                    f"{csv_path}:{line_no}: expected sequence_id, "
                    f"object_label and at least one value"
                )
            seq_id, label, values = row[0], row[1], row[2:]
            if seq_id != current_id:
                flush()
                current_id, current_label, rows = seq_id, label, []
            try:
                rows.append([float(v) for v in values])
            except ValueError as exc:
                raise ManifestSchemaError(
                    f"{csv_path}:{line_no}: bad float: {exc}") from exc
    flush()
    return write_manifest(DatasetManifest(sequences), out_dir)
