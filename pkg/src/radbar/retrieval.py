"""Searchable code index and the two-stage query path.

Stage 1 scans every stored activation code (CNNC) by Hamming distance and
keeps the k1 closest. Stage 2 re-ranks those candidates by Radon-barcode
distance and returns the top k2. All orderings break ties by ascending
image id so results are total and reproducible.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .barcode import (
    ActivationVector,
    BitCode,
    CodeKind,
    CodeMismatchError,
    binarize_activations,
    fallback_descriptor,
    hamming,
    hamming_scan,
    pack_codes,
    radon_barcode,
)
from .imagecore import GrayImage, load_grayscale
from .irma import CardinalityTable, IrmaCode, build_cardinalities, irma_error, parse_irma

if TYPE_CHECKING:  # pragma: no cover
    from .datastore import ManifestRecord


class RbcMode(str, Enum):
    PRECOMPUTE = "precompute"
    LAZY = "lazy"


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"


@dataclass(frozen=True)
class IndexConfig:
    """Generation parameters shared by every entry of an index."""

    cnnc_dim: int = 1024
    rbc_side: int = 192
    rbc_angles: int = 16
    k1: int = 50
    k2: int = 10
    rbc_mode: RbcMode = RbcMode.PRECOMPUTE
    cnnc_source: str = "fallback"  # "fallback" or "external"

    @property
    def rbc_bits(self) -> int:
        return self.rbc_side * self.rbc_angles

    def to_json_dict(self) -> dict:
        return {
            "cnnc_dim": self.cnnc_dim,
            "rbc_side": self.rbc_side,
            "rbc_angles": self.rbc_angles,
            "k1": self.k1,
            "k2": self.k2,
            "rbc_mode": self.rbc_mode.value,
            "cnnc_source": self.cnnc_source,
        }

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "IndexConfig":
        return cls(
            cnnc_dim=int(d["cnnc_dim"]),
            rbc_side=int(d["rbc_side"]),
            rbc_angles=int(d["rbc_angles"]),
            k1=int(d["k1"]),
            k2=int(d["k2"]),
            rbc_mode=RbcMode(d["rbc_mode"]),
            cnnc_source=str(d["cnnc_source"]),
        )


@dataclass
class IndexEntry:
    """One indexed image: codes, label and provenance.

    ``rbc`` may start out absent in lazy mode; it is filled exactly once by
    the index's memoizing re-rank path and never changes afterwards.
    """

    image_id: str
    path: str
    cnnc: BitCode
    rbc: BitCode | None = None
    irma: IrmaCode | None = None
    split: Split = Split.TRAIN


class RetrievalIndex:
    """Immutable corpus of entries, ordered by image id."""

    def __init__(
        self,
        entries: Sequence[IndexEntry],
        config: IndexConfig,
        cardinalities: CardinalityTable | None = None,
    ) -> None:
        self.entries: list[IndexEntry] = sorted(entries, key=lambda e: e.image_id)
        self.config = config
        self.cardinalities = cardinalities
        self._by_id = {e.image_id: e for e in self.entries}
        if len(self._by_id) != len(self.entries):
            raise ValueError("duplicate image_id in index entries")
        for e in self.entries:
            if e.cnnc.kind is not CodeKind.CNNC or e.cnnc.length != config.cnnc_dim:
                raise ValueError(
                    f"entry {e.image_id}: CNNC length {e.cnnc.length} does not match "
                    f"configured {config.cnnc_dim}"
                )
            if e.rbc is not None and (
                e.rbc.kind is not CodeKind.RBC or e.rbc.length != config.rbc_bits
            ):
                raise ValueError(
                    f"entry {e.image_id}: RBC length does not match configured "
                    f"{config.rbc_bits}"
                )
        self._cnnc_matrix: np.ndarray | None = None
        self._rbc_lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, image_id: str) -> IndexEntry | None:
        return self._by_id.get(image_id)

    def cnnc_matrix(self) -> np.ndarray:
        if self._cnnc_matrix is None:
            self._cnnc_matrix = pack_codes([e.cnnc for e in self.entries])
        return self._cnnc_matrix

    def ensure_rbc(self, entry: IndexEntry) -> BitCode:
        """Memoize the entry's Radon barcode (lazy mode); race-safe."""
        code = entry.rbc
        if code is not None:
            return code
        with self._rbc_lock:
            if entry.rbc is None:
                img = load_grayscale(entry.path)
                entry.rbc = radon_barcode(
                    img, self.config.rbc_side, self.config.rbc_angles
                )
            return entry.rbc


@dataclass(frozen=True)
class Candidate:
    entry: IndexEntry
    cnnc_distance: int


@dataclass(frozen=True)
class Hit:
    image_id: str
    cnnc_distance: int
    rbc_distance: int
    final_rank: int


@dataclass(frozen=True)
class RetrievalResult:
    query_id: str
    hits: tuple[Hit, ...]
    first_hit_error: float | None = None

    def to_json_dict(self) -> dict:
        d = {
            "query_id": self.query_id,
            "hits": [
                {
                    "image_id": h.image_id,
                    "cnnc_distance": h.cnnc_distance,
                    "rbc_distance": h.rbc_distance,
                    "final_rank": h.final_rank,
                }
                for h in self.hits
            ],
        }
        if self.first_hit_error is not None:
            d["first_hit_error"] = self.first_hit_error
        return d


# ---------------------------------------------------------------------------
# Index construction

def _entry_for_record(
    record: "ManifestRecord",
    config: IndexConfig,
    embeddings: Mapping[str, ActivationVector] | None,
    dim_side: int,
) -> IndexEntry:
    img = load_grayscale(record.path)
    if embeddings is not None:
        vec = embeddings.get(record.image_id)
        if vec is None:
            raise ValueError(f"no embedding record for image {record.image_id!r}")
        if vec.dimension != config.cnnc_dim:
            raise ValueError(
                f"embedding for {record.image_id!r} has dimension {vec.dimension}, "
                f"expected {config.cnnc_dim}"
            )
        cnnc = binarize_activations(vec)
    else:
        cnnc = binarize_activations(fallback_descriptor(img, dim_side))
    rbc = None
    if config.rbc_mode is RbcMode.PRECOMPUTE:
        rbc = radon_barcode(img, config.rbc_side, config.rbc_angles)
    irma = parse_irma(record.irma_code) if record.irma_code else None
    return IndexEntry(
        image_id=record.image_id,
        path=str(record.path),
        cnnc=cnnc,
        rbc=rbc,
        irma=irma,
        split=Split(record.split),
    )


def build_index(
    records: Sequence["ManifestRecord"],
    config: IndexConfig | None = None,
    embeddings: Mapping[str, ActivationVector] | None = None,
    workers: int = 1,
) -> RetrievalIndex:
    """Index every train-split manifest record.

    Activation codes come from the embeddings mapping when given (its
    uniform dimension becomes the index's CNNC dimension), otherwise from
    the built-in fallback descriptor. Radon barcodes are computed eagerly
    in precompute mode and on demand in lazy mode. The cardinality table is
    derived from whatever train labels are present.
    """
    config = config or IndexConfig()
    train = [r for r in records if r.split == Split.TRAIN.value]
    if not train:
        raise ValueError("manifest has no train-split records to index")
    seen: set[str] = set()
    for r in train:
        if r.image_id in seen:
            raise ValueError(f"duplicate image_id {r.image_id!r} in manifest")
        seen.add(r.image_id)

    if embeddings is not None:
        dims = {v.dimension for v in embeddings.values()}
        if len(dims) > 1:
            raise ValueError(f"embeddings carry mixed dimensions {sorted(dims)}")
        if dims:
            config = dataclasses.replace(
                config, cnnc_dim=dims.pop(), cnnc_source="external"
            )
        dim_side = 0
    else:
        config = dataclasses.replace(config, cnnc_source="fallback")
        dim_side = math.isqrt(config.cnnc_dim)
        if dim_side * dim_side != config.cnnc_dim:
            raise ValueError(
                f"fallback descriptor needs a square CNNC dimension, got {config.cnnc_dim}"
            )

    if workers <= 1 or len(train) <= 1:
        entries = [_entry_for_record(r, config, embeddings, dim_side) for r in train]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(
                pool.map(
                    lambda r: _entry_for_record(r, config, embeddings, dim_side), train
                )
            )

    labeled = [e.irma for e in entries if e.irma is not None]
    cardinalities = build_cardinalities(labeled) if labeled else None
    return RetrievalIndex(entries, config, cardinalities)


# ---------------------------------------------------------------------------
# Query path

def stage1_candidates(
    index: RetrievalIndex, query_cnnc: BitCode, k1: int = 50
) -> list[Candidate]:
    """The k1 entries closest to the query CNNC, ties by ascending image id."""
    if len(index) == 0:
        raise ValueError("cannot query an empty index")
    if query_cnnc.kind is not CodeKind.CNNC:
        raise CodeMismatchError(f"stage 1 needs a CNNC query, got {query_cnnc.kind.value}")
    if query_cnnc.length != index.config.cnnc_dim:
        raise CodeMismatchError(
            f"query CNNC length {query_cnnc.length} does not match index "
            f"({index.config.cnnc_dim})"
        )
    distances = hamming_scan(index.cnnc_matrix(), query_cnnc)
    # Entries are sorted by image_id, so a stable sort on distance breaks
    # ties by id for free.
    order = np.argsort(distances, kind="stable")[: max(0, k1)]
    return [Candidate(index.entries[i], int(distances[i])) for i in order]


def stage2_rerank(
    index: RetrievalIndex,
    candidates: Sequence[Candidate],
    query_rbc: BitCode,
    k2: int = 10,
) -> list[Hit]:
    """Re-rank candidates by (RBC distance, CNNC distance, image id)."""
    if not candidates:
        raise ValueError("cannot re-rank an empty candidate list")
    if query_rbc.kind is not CodeKind.RBC:
        raise CodeMismatchError(f"stage 2 needs an RBC query, got {query_rbc.kind.value}")
    if query_rbc.length != index.config.rbc_bits:
        raise CodeMismatchError(
            f"query RBC length {query_rbc.length} does not match index "
            f"({index.config.rbc_bits})"
        )
    scored = []
    for cand in candidates:
        rbc = index.ensure_rbc(cand.entry)
        scored.append((hamming(rbc, query_rbc), cand.cnnc_distance, cand.entry.image_id))
    order = sorted(range(len(scored)), key=lambda i: scored[i])
    hits = []
    for rank, i in enumerate(order[: max(0, k2)], start=1):
        rbc_d, cnnc_d, image_id = scored[i]
        hits.append(
            Hit(
                image_id=image_id,
                cnnc_distance=cnnc_d,
                rbc_distance=rbc_d,
                final_rank=rank,
            )
        )
    return hits


def query_fingerprint(image_bytes: bytes, cnnc: BitCode, k1: int, k2: int) -> str:
    """Deterministic query id: same image and parameters, same id."""
    digest = hashlib.sha256()
    digest.update(image_bytes)
    digest.update(cnnc.to_hex().encode("ascii"))
    digest.update(f":{k1}:{k2}".encode("ascii"))
    return digest.hexdigest()[:16]


def query_codes(
    index: RetrievalIndex,
    query_image: GrayImage,
    query_activations: ActivationVector | None = None,
) -> tuple[BitCode, BitCode]:
    """Produce the (CNNC, RBC) pair for a query at the index configuration.

    The activation source must match the one the index was built with, so
    fallback codes are never compared against externally derived ones.
    """
    config = index.config
    if config.cnnc_source == "external":
        if query_activations is None:
            raise CodeMismatchError(
                "index was built from external embeddings; the query needs an "
                "activation vector"
            )
    elif query_activations is not None:
        raise CodeMismatchError(
            "index was built with fallback descriptors; refusing externally "
            "supplied query activations"
        )
    if query_activations is not None:
        if query_activations.dimension != config.cnnc_dim:
            raise CodeMismatchError(
                f"query activations have dimension {query_activations.dimension}, "
                f"index expects {config.cnnc_dim}"
            )
        cnnc = binarize_activations(query_activations)
    else:
        cnnc = binarize_activations(
            fallback_descriptor(query_image, math.isqrt(config.cnnc_dim))
        )
    rbc = radon_barcode(query_image, config.rbc_side, config.rbc_angles)
    return cnnc, rbc


def retrieve(
    index: RetrievalIndex,
    query_image: GrayImage,
    query_activations: ActivationVector | None = None,
    query_label: IrmaCode | None = None,
    k1: int | None = None,
    k2: int | None = None,
    query_id: str = "query",
) -> RetrievalResult:
    """Run the full two-stage retrieval for one query image.

    When both the index and the query carry labels, the first-hit error is
    attached to the result.
    """
    if len(index) == 0:
        raise ValueError("cannot query an empty index")
    k1 = index.config.k1 if k1 is None else k1
    k2 = index.config.k2 if k2 is None else k2
    cnnc, rbc = query_codes(index, query_image, query_activations)
    candidates = stage1_candidates(index, cnnc, k1)
    hits = stage2_rerank(index, candidates, rbc, k2)
    first_hit_error = None
    if hits and query_label is not None and index.cardinalities is not None:
        top = index.get(hits[0].image_id)
        if top is not None and top.irma is not None:
            first_hit_error = irma_error(query_label, top.irma, index.cardinalities)
    return RetrievalResult(
        query_id=query_id, hits=tuple(hits), first_hit_error=first_hit_error
    )
