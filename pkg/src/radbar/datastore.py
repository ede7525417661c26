"""File formats: manifest CSV, embedding sidecars, and index persistence.

Manifests are CSV with header ``image_id,path,split,irma_code``; paths are
relative to the manifest's directory. Embeddings and indexes are UTF-8
JSON-lines. An index file starts with a header record (format tag,
version, entry count, config, cardinalities) followed by one record per
entry; loading verifies the header against the body so truncation or
corruption never passes silently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .barcode import ActivationVector, BitCode, CodeKind
from .irma import CardinalityTable, parse_irma
from .retrieval import IndexConfig, IndexEntry, RetrievalIndex, Split

INDEX_FORMAT = "radbar-index"
INDEX_VERSION = 1


class ManifestError(ValueError):
    """Raised for malformed manifest files."""


class EmbeddingFileError(ValueError):
    """Raised for malformed embedding sidecar files."""


class IndexFileError(ValueError):
    """Raised for unreadable or inconsistent index files."""


@dataclass(frozen=True)
class ManifestRecord:
    image_id: str
    path: str  # resolved against the manifest directory
    split: str  # "train" or "test"
    irma_code: str | None = None


@dataclass(frozen=True, eq=False)
class EmbeddingRecord:
    image_id: str
    activations: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.activations, dtype=np.float64, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "activations", arr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingRecord):
            return NotImplemented
        return self.image_id == other.image_id and np.array_equal(
            self.activations, other.activations
        )


MANIFEST_HEADER = ["image_id", "path", "split", "irma_code"]


def read_manifest(path) -> list[ManifestRecord]:
    """Parse a manifest CSV; relative image paths resolve beside the file."""
    import csv

    p = Path(path)
    root = p.parent
    try:
        fh = open(p, newline="", encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {p}: {exc}") from exc
    records: list[ManifestRecord] = []
    seen: set[str] = set()
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"manifest {p} is empty (missing header)") from None
        if [h.strip() for h in header] != MANIFEST_HEADER:
            raise ManifestError(
                f"manifest {p} header must be {','.join(MANIFEST_HEADER)}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # blank line
            if len(row) != 4:
                raise ManifestError(f"manifest {p} row {lineno}: expected 4 fields, got {len(row)}")
            image_id, rel_path, split, irma_code = (field.strip() for field in row)
            if not image_id:
                raise ManifestError(f"manifest {p} row {lineno}: empty image_id")
            if image_id in seen:
                raise ManifestError(f"manifest {p} row {lineno}: duplicate image_id {image_id!r}")
            seen.add(image_id)
            if split not in (Split.TRAIN.value, Split.TEST.value):
                raise ManifestError(
                    f"manifest {p} row {lineno}: unknown split {split!r} "
                    f"(expected train or test)"
                )
            rel = Path(rel_path)
            if rel.is_absolute() or ".." in rel.parts:
                raise ManifestError(
                    f"manifest {p} row {lineno}: path must stay under the dataset root"
                )
            records.append(
                ManifestRecord(
                    image_id=image_id,
                    path=str(root / rel),
                    split=split,
                    irma_code=irma_code or None,
                )
            )
    return records


def read_embeddings(path) -> list[EmbeddingRecord]:
    """Parse a JSON-lines activation sidecar, enforcing a uniform dimension."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise EmbeddingFileError(f"cannot read embeddings {p}: {exc}") from exc
    records: list[EmbeddingRecord] = []
    dimension: int | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise EmbeddingFileError(f"embeddings {p} line {lineno}: invalid JSON ({exc})") from exc
        if not isinstance(obj, dict) or "image_id" not in obj or "activations" not in obj:
            raise EmbeddingFileError(
                f"embeddings {p} line {lineno}: need image_id and activations fields"
            )
        values = obj["activations"]
        if not isinstance(values, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
        ):
            raise EmbeddingFileError(
                f"embeddings {p} line {lineno}: activations must be a list of numbers"
            )
        if not all(math.isfinite(v) for v in values):
            raise EmbeddingFileError(
                f"embeddings {p} line {lineno}: activations contain a non-finite value"
            )
        if dimension is None:
            dimension = len(values)
        elif len(values) != dimension:
            raise EmbeddingFileError(
                f"embeddings {p} line {lineno}: dimension {len(values)} does not match "
                f"earlier dimension {dimension}"
            )
        records.append(
            EmbeddingRecord(image_id=str(obj["image_id"]), activations=np.asarray(values))
        )
    return records


def embeddings_by_id(records: Sequence[EmbeddingRecord]) -> dict[str, ActivationVector]:
    return {r.image_id: ActivationVector.from_values(r.activations) for r in records}


# ---------------------------------------------------------------------------
# Index persistence

def save_index(index: RetrievalIndex, path) -> None:
    """Write the index as a header line plus one JSON line per entry."""
    p = Path(path)
    header = {
        "format": INDEX_FORMAT,
        "version": INDEX_VERSION,
        "count": len(index),
        "config": index.config.to_json_dict(),
        "cardinalities": (
            [list(axis) for axis in index.cardinalities.counts]
            if index.cardinalities is not None
            else None
        ),
    }
    lines = [json.dumps(header, sort_keys=True)]
    for e in index.entries:
        lines.append(
            json.dumps(
                {
                    "image_id": e.image_id,
                    "path": e.path,
                    "split": e.split.value,
                    "irma": e.irma.raw if e.irma is not None else None,
                    "cnnc_hex": e.cnnc.to_hex(),
                    "cnnc_bits": e.cnnc.length,
                    "rbc_hex": e.rbc.to_hex() if e.rbc is not None else None,
                    "rbc_bits": e.rbc.length if e.rbc is not None else None,
                },
                sort_keys=True,
            )
        )
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_index(path) -> RetrievalIndex:
    """Reload a saved index, verifying header, counts and code lengths."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise IndexFileError(f"cannot read index {p}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise IndexFileError(f"index file {p} is empty")

    def parse_line(lineno: int, line: str) -> dict:
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IndexFileError(f"index {p} line {lineno}: invalid JSON ({exc})") from exc
        if not isinstance(obj, dict):
            raise IndexFileError(f"index {p} line {lineno}: expected an object")
        return obj

    header = parse_line(1, lines[0])
    if header.get("format") != INDEX_FORMAT:
        raise IndexFileError(f"index {p}: unrecognized format tag {header.get('format')!r}")
    if header.get("version") != INDEX_VERSION:
        raise IndexFileError(
            f"index {p}: version {header.get('version')!r} is not supported "
            f"(expected {INDEX_VERSION})"
        )
    try:
        config = IndexConfig.from_json_dict(header["config"])
    except (KeyError, ValueError, TypeError) as exc:
        raise IndexFileError(f"index {p}: bad config header ({exc})") from exc
    declared = header.get("count")
    body = lines[1:]
    if declared != len(body):
        raise IndexFileError(
            f"index {p}: header declares {declared} records but file holds {len(body)}"
        )
    cardinalities = None
    if header.get("cardinalities") is not None:
        try:
            cardinalities = CardinalityTable(
                counts=tuple(tuple(int(b) for b in axis) for axis in header["cardinalities"])
            )
        except (TypeError, ValueError) as exc:
            raise IndexFileError(f"index {p}: bad cardinality table ({exc})") from exc

    entries: list[IndexEntry] = []
    previous_id: str | None = None
    for lineno, line in enumerate(body, start=2):
        obj = parse_line(lineno, line)
        try:
            image_id = str(obj["image_id"])
            cnnc_bits = int(obj["cnnc_bits"])
            if cnnc_bits != config.cnnc_dim:
                raise IndexFileError(
                    f"index {p} line {lineno}: cnnc_bits {cnnc_bits} does not match "
                    f"header config ({config.cnnc_dim})"
                )
            cnnc = BitCode.from_hex(
                str(obj["cnnc_hex"]),
                cnnc_bits,
                CodeKind.CNNC,
                {"dimension": cnnc_bits},
            )
            rbc = None
            if obj.get("rbc_hex") is not None:
                rbc_bits = int(obj["rbc_bits"])
                if rbc_bits != config.rbc_bits:
                    raise IndexFileError(
                        f"index {p} line {lineno}: rbc_bits {rbc_bits} does not match "
                        f"header config ({config.rbc_bits})"
                    )
                rbc = BitCode.from_hex(
                    str(obj["rbc_hex"]),
                    rbc_bits,
                    CodeKind.RBC,
                    {"side": config.rbc_side, "angle_count": config.rbc_angles},
                )
            irma = parse_irma(obj["irma"]) if obj.get("irma") else None
            entry = IndexEntry(
                image_id=image_id,
                path=str(obj["path"]),
                cnnc=cnnc,
                rbc=rbc,
                irma=irma,
                split=Split(obj.get("split", "train")),
            )
        except IndexFileError:
            raise
        except (KeyError, ValueError, TypeError) as exc:
            raise IndexFileError(f"index {p} line {lineno}: bad record ({exc})") from exc
        if previous_id is not None and image_id <= previous_id:
            raise IndexFileError(
                f"index {p} line {lineno}: image ids out of order or duplicated "
                f"({image_id!r} after {previous_id!r})"
            )
        previous_id = image_id
        entries.append(entry)
    return RetrievalIndex(entries, config, cardinalities)
