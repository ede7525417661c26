"""Command line entry points: index building, querying, batch evaluation,
ROI matching and the HTTP service.

Verbosity comes from the RADBAR_LOG environment variable
(error|warn|info|debug, default warn).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import datastore
from .imagecore import ImageFormatError, Roi, load_grayscale
from .irma import format_report, parse_irma, report_to_json_dict, total_error
from .retrieval import (
    IndexConfig,
    RbcMode,
    build_index,
    query_codes,
    query_fingerprint,
    retrieve,
)
from .roimatch import matches_to_json, roi_match

log = logging.getLogger("radbar.cli")

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _configure_logging() -> None:
    name = os.environ.get("RADBAR_LOG", "warn").strip().lower()
    level = _LOG_LEVELS.get(name)
    if level is None:
        level = logging.WARNING
        logging.basicConfig(level=level)
        log.warning("unknown RADBAR_LOG value %r, using warn", name)
        return
    logging.basicConfig(level=level)


def _load_query_activations(path, query_path):
    """Pick the query's activation record from a sidecar file.

    A single-record sidecar is used as-is; otherwise the record whose
    image_id matches the query file stem wins.
    """
    records = datastore.read_embeddings(path)
    if not records:
        raise ValueError(f"embeddings file {path} holds no records")
    if len(records) == 1:
        chosen = records[0]
    else:
        stem = Path(query_path).stem
        by_id = {r.image_id: r for r in records}
        if stem not in by_id:
            raise ValueError(
                f"embeddings file {path} has no record for query image {stem!r}"
            )
        chosen = by_id[stem]
    from .barcode import ActivationVector

    return ActivationVector.from_values(chosen.activations)


def cmd_build_index(args) -> int:
    started = time.perf_counter()
    records = datastore.read_manifest(args.manifest)
    embeddings = None
    if args.embeddings:
        embeddings = datastore.embeddings_by_id(datastore.read_embeddings(args.embeddings))
    config = IndexConfig(
        cnnc_dim=args.cnnc_dim,
        rbc_side=args.rbc_side,
        rbc_angles=args.rbc_angles,
        rbc_mode=RbcMode(args.rbc_mode),
    )
    index = build_index(records, config, embeddings, workers=args.workers)
    datastore.save_index(index, args.out)
    elapsed = time.perf_counter() - started
    print(
        f"indexed {len(index)} images "
        f"(cnnc {index.config.cnnc_dim} bits, rbc {index.config.rbc_bits} bits) "
        f"in {elapsed:.2f}s -> {args.out}"
    )
    return 0


def cmd_query(args) -> int:
    index = datastore.load_index(args.index)
    image_path = Path(args.image)
    image = load_grayscale(image_path)
    activations = None
    if args.embeddings:
        activations = _load_query_activations(args.embeddings, image_path)
    k1 = index.config.k1 if args.k1 is None else args.k1
    k2 = index.config.k2 if args.k2 is None else args.k2
    cnnc, _ = query_codes(index, image, activations)
    query_id = query_fingerprint(image_path.read_bytes(), cnnc, k1, k2)
    result = retrieve(index, image, activations, k1=k1, k2=k2, query_id=query_id)
    if args.json:
        print(json.dumps(result.to_json_dict(), indent=2))
    else:
        print(f"query {result.query_id}: top {len(result.hits)} of {len(index)} images")
        print(f"{'rank':>4}  {'image_id':<24} {'cnnc':>6} {'rbc':>6}")
        for hit in result.hits:
            print(
                f"{hit.final_rank:>4}  {hit.image_id:<24} "
                f"{hit.cnnc_distance:>6} {hit.rbc_distance:>6}"
            )
    return 0


def cmd_evaluate(args) -> int:
    index = datastore.load_index(args.index)
    if index.cardinalities is None:
        raise ValueError("index carries no labels; cannot evaluate")
    records = datastore.read_manifest(args.manifest)
    test = [r for r in records if r.split == "test"]
    if not test:
        raise ValueError(f"manifest {args.manifest} has no test-split records")
    embeddings = None
    if args.embeddings:
        embeddings = datastore.embeddings_by_id(datastore.read_embeddings(args.embeddings))
    if index.config.cnnc_source == "external" and embeddings is None:
        raise ValueError(
            "index was built from external embeddings; --embeddings is required"
        )
    pairs = []
    ids = []
    skipped = 0
    for record in test:
        if not record.irma_code:
            skipped += 1
            continue
        label = parse_irma(record.irma_code)
        image = load_grayscale(record.path)
        activations = None
        if embeddings is not None:
            activations = embeddings.get(record.image_id)
            if activations is None:
                raise ValueError(f"no embedding record for test image {record.image_id!r}")
        result = retrieve(
            index, image, activations, query_label=label, query_id=record.image_id
        )
        top = index.get(result.hits[0].image_id)
        if top is None or top.irma is None:
            log.warning("first hit %s has no label; skipping query %s",
                        result.hits[0].image_id, record.image_id)
            skipped += 1
            continue
        pairs.append((label, top.irma))
        ids.append((record.image_id, top.image_id))
    if not pairs:
        raise ValueError("no labeled test queries could be evaluated")
    report = total_error(pairs, index.cardinalities, ids=ids)
    Path(args.report).write_text(
        json.dumps(report_to_json_dict(report, skipped), indent=2) + "\n",
        encoding="utf-8",
    )
    print(format_report(report, skipped))
    print(f"report written to {args.report}")
    return 0


def cmd_roi_match(args) -> int:
    index = datastore.load_index(args.index)
    image = load_grayscale(args.image)
    try:
        parts = [int(v) for v in args.roi.split(",")]
    except ValueError as exc:
        raise ValueError(f"--roi must be x,y,w,h integers, got {args.roi!r}") from exc
    if len(parts) != 4:
        raise ValueError(f"--roi must have 4 components, got {len(parts)}")
    roi = Roi(x=parts[0], y=parts[1], w=parts[2], h=parts[3])
    roi.check_within(image.width, image.height)

    if args.from_query:
        result = retrieve(index, image)
        target_ids = [hit.image_id for hit in result.hits]
    elif args.targets:
        target_ids = [t.strip() for t in args.targets.split(",") if t.strip()]
    else:
        raise ValueError("either --targets or --from-query is required")
    if not target_ids:
        raise ValueError("no target images selected")
    targets = []
    for target_id in target_ids:
        entry = index.get(target_id)
        if entry is None:
            raise ValueError(f"unknown target id {target_id!r}")
        targets.append((target_id, load_grayscale(entry.path)))
    results = roi_match(image, roi, targets)
    print(json.dumps(matches_to_json(results), indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    index = datastore.load_index(args.index)
    host, _, port_text = args.listen.rpartition(":")
    if not host or not port_text.isdigit():
        raise ValueError(f"--listen must be host:port, got {args.listen!r}")
    app = create_app(
        index,
        static_dir=args.static,
        max_upload_bytes=args.max_upload_mib * 1024 * 1024,
    )
    level = os.environ.get("RADBAR_LOG", "warn").strip().lower()
    uvicorn.run(app, host=host, port=int(port_text),
                log_level="warning" if level == "warn" else level)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radbar",
        description="Two-stage binary-code image retrieval engine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-index", help="index the train split of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--rbc-side", type=int, default=192)
    p.add_argument("--rbc-angles", type=int, default=16)
    p.add_argument("--rbc-mode", choices=["precompute", "lazy"], default="precompute")
    p.add_argument("--cnnc-dim", type=int, default=1024)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("query", help="retrieve the closest images for one query")
    p.add_argument("--index", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--k1", type=int, default=None)
    p.add_argument("--k2", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("evaluate", help="first-hit error over a manifest's test split")
    p.add_argument("--index", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("roi-match", help="locate a query ROI inside stored images")
    p.add_argument("--index", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--roi", required=True, metavar="x,y,w,h")
    p.add_argument("--targets", default=None)
    p.add_argument("--from-query", action="store_true")
    p.set_defaults(func=cmd_roi_match)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--index", required=True)
    p.add_argument("--listen", default="127.0.0.1:8000")
    p.add_argument("--static", default=None)
    p.add_argument("--max-upload-mib", type=int, default=16)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        ValueError,
        ImageFormatError,
        datastore.ManifestError,
        datastore.EmbeddingFileError,
        datastore.IndexFileError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
