"""Shared fixtures: tiny deterministic corpora for retrieval-level tests."""

from __future__ import annotations

import numpy as np
import pytest

from radbar.imagecore import GrayImage, save_pgm
from radbar.synthetic import CLASS_SPECS, synthesize_image


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)


def random_image(rng: np.random.Generator, width: int, height: int) -> GrayImage:
    return GrayImage.from_array(rng.random((height, width)))


def write_corpus(
    root,
    count: int = 12,
    size: int = 32,
    seed: int = 99,
    labels: bool = True,
    test_every: int = 4,
):
    """Write a small on-disk corpus and manifest; returns the manifest path.

    Class labels rotate through the synthetic class specs so retrieval has
    structure to find.
    """
    root.mkdir(parents=True, exist_ok=True)
    (root / "images").mkdir(exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = ["image_id,path,split,irma_code"]
    for i in range(count):
        cls = i % len(CLASS_SPECS)
        img = synthesize_image(cls, rng, size=size)
        image_id = f"img{i:03d}"
        rel = f"images/{image_id}.pgm"
        save_pgm(img, root / rel)
        split = "test" if (test_every and i % test_every == test_every - 1) else "train"
        code = CLASS_SPECS[cls][1] if labels else ""
        rows.append(f"{image_id},{rel},{split},{code}")
    manifest = root / "manifest.csv"
    manifest.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return manifest
