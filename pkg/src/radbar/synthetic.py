"""Bundled synthetic corpus: ten visually distinct grayscale classes with
hierarchical labels, plus a Monte-Carlo baseline for random retrieval.

The generator writes 8-bit PGM files and a manifest CSV so the whole
pipeline (index build, query, evaluation) can run without any external
dataset. Classes differ in global layout (disk, ring, stripes, ...) with
per-instance jitter in position, scale, brightness and noise.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .imagecore import GrayImage, save_pgm
from .irma import CardinalityTable, IrmaCode, irma_error

CLASS_SPECS: tuple[tuple[str, str], ...] = (
    ("disk", "1121-120-200-700"),
    ("ring", "1121-127-700-500"),
    ("square", "1123-211-500-000"),
    ("hstripes", "1121-110-414-700"),
    ("vstripes", "1124-410-620-625"),
    ("dstripes", "112d-121-500-000"),
    ("cross", "1123-110-800-420"),
    ("checker", "1121-240-442-700"),
    ("vgrad", "112c-229-700-400"),
    ("xcross", "1124-110-212-700"),
)

DEFAULT_SEED = 20240809


def synthesize_image(class_index: int, rng: np.random.Generator, size: int = 64) -> GrayImage:
    """One jittered sample of the given class on a size x size canvas."""
    n = size
    yy, xx = np.mgrid[0:n, 0:n].astype(np.float64)
    img = np.full((n, n), 0.15 + rng.uniform(-0.05, 0.05))
    cy = n / 2 + rng.uniform(-3, 3)
    cx = n / 2 + rng.uniform(-3, 3)
    hi = 0.85 + rng.uniform(-0.1, 0.1)
    name = CLASS_SPECS[class_index][0]
    if name == "disk":
        r = n * 0.28 + rng.uniform(-2, 2)
        img[(yy - cy) ** 2 + (xx - cx) ** 2 <= r * r] = hi
    elif name == "ring":
        r = n * 0.32 + rng.uniform(-2, 2)
        d2 = (yy - cy) ** 2 + (xx - cx) ** 2
        img[(d2 <= r * r) & (d2 >= (r - 5.0) ** 2)] = hi
    elif name == "square":
        s = n * 0.24 + rng.uniform(-2, 2)
        img[(np.abs(yy - cy) <= s) & (np.abs(xx - cx) <= s)] = hi
    elif name == "hstripes":
        period = 10.0 + rng.uniform(-1, 1)
        img[np.sin(2 * np.pi * (yy + rng.uniform(0, 10)) / period) > 0] = hi
    elif name == "vstripes":
        period = 10.0 + rng.uniform(-1, 1)
        img[np.sin(2 * np.pi * (xx + rng.uniform(0, 10)) / period) > 0] = hi
    elif name == "dstripes":
        period = 12.0 + rng.uniform(-1, 1)
        img[np.sin(2 * np.pi * (xx + yy + rng.uniform(0, 12)) / period) > 0] = hi
    elif name == "cross":
        w = n * 0.09 + rng.uniform(-1, 1)
        img[(np.abs(yy - cy) <= w) | (np.abs(xx - cx) <= w)] = hi
    elif name == "checker":
        cell = n // 4
        img[((yy // cell + xx // cell) % 2) == 0] = hi
    elif name == "vgrad":
        img = 0.1 + 0.8 * (yy / n) + rng.uniform(-0.05, 0.05)
    elif name == "xcross":
        w = 4.0 + rng.uniform(-0.5, 0.5)
        img[(np.abs((yy - cy) - (xx - cx)) <= w) | (np.abs((yy - cy) + (xx - cx)) <= w)] = hi
    else:  # pragma: no cover
        raise ValueError(f"unknown class index {class_index}")
    img = img + rng.normal(0.0, 0.02, (n, n))
    return GrayImage.from_array(np.clip(img, 0.0, 1.0))


def generate_dataset(
    root,
    images_per_class: int = 20,
    train_per_class: int = 16,
    size: int = 64,
    seed: int = DEFAULT_SEED,
) -> Path:
    """Write PGM images and a manifest CSV under ``root``; returns the manifest path.

    The first ``train_per_class`` samples of each class go to the train
    split, the remainder to test.
    """
    if not (1 <= train_per_class <= images_per_class):
        raise ValueError("train_per_class must lie in [1, images_per_class]")
    root = Path(root)
    image_dir = root / "images"
    image_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = ["image_id,path,split,irma_code"]
    for cls, (name, code) in enumerate(CLASS_SPECS):
        for i in range(images_per_class):
            img = synthesize_image(cls, rng, size=size)
            image_id = f"{name}_{i:03d}"
            rel = f"images/{image_id}.pgm"
            save_pgm(img, root / rel)
            split = "train" if i < train_per_class else "test"
            rows.append(f"{image_id},{rel},{split},{code}")
    manifest = root / "manifest.csv"
    manifest.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return manifest


def expected_random_first_hit_error(
    train_labels: Sequence[IrmaCode],
    query_labels: Sequence[IrmaCode],
    table: CardinalityTable,
    draws: int = 10000,
    seed: int = 7,
) -> float:
    """Monte-Carlo estimate of the total error when every query's first hit
    is drawn uniformly at random from the train labels."""
    if not train_labels or not query_labels:
        raise ValueError("need non-empty train and query label collections")
    if draws < 1:
        raise ValueError("draws must be >= 1")
    # Pairwise errors repeat heavily (few distinct label pairs), so cache them.
    cache: dict[tuple[str, str], float] = {}

    def pair_error(q: IrmaCode, t: IrmaCode) -> float:
        key = (q.raw, t.raw)
        if key not in cache:
            cache[key] = irma_error(q, t, table)
        return cache[key]

    error_matrix = np.array(
        [[pair_error(q, t) for t in train_labels] for q in query_labels]
    )
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(train_labels), size=(draws, len(query_labels)))
    totals = error_matrix[np.arange(len(query_labels))[None, :], picks].sum(axis=1)
    return float(totals.mean())


def class_of_image_id(image_id: str) -> str:
    """The class name prefix of a generated image id (e.g. disk_003 -> disk)."""
    return image_id.rsplit("_", 1)[0]


def _main(argv: Sequence[str] | None = None) -> int:
    import argparse

    parser = argparse.ArgumentParser(
        description="Generate the bundled synthetic retrieval dataset."
    )
    parser.add_argument("root", help="output directory")
    parser.add_argument("--per-class", type=int, default=20)
    parser.add_argument("--train-per-class", type=int, default=16)
    parser.add_argument("--size", type=int, default=64)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    args = parser.parse_args(argv)
    manifest = generate_dataset(
        args.root,
        images_per_class=args.per_class,
        train_per_class=args.train_per_class,
        size=args.size,
        seed=args.seed,
    )
    total = args.per_class * len(CLASS_SPECS)
    print(f"wrote {total} images across {len(CLASS_SPECS)} classes; manifest: {manifest}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(_main())
