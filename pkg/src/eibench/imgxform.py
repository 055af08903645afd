"""Exact image transforms: 90-degree rotations and grayscale.

Rotations are pure pixel permutations (no interpolation, no value
changes); grayscale collapses color to BT.601 luma and replicates it
across three channels so 3-channel classifiers accept the result.

Images are numpy uint8 arrays, shape (H, W) or (H, W, C) with C in
{1, 3}, row-major and channel-interleaved.
"""

import logging
import shutil
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FormatError
from .predstore import IDENTITY, TRANSFORM_TAGS

log = logging.getLogger(__name__)

# BT.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


def rotate90k(img: np.ndarray, k: int) -> np.ndarray:
    """Rotate counter-clockwise by k*90 degrees, k in {1, 2, 3}."""
    if k not in (1, 2, 3):
        raise ValueError(f"k must be 1, 2 or 3, got {k!r}")
    return np.ascontiguousarray(np.rot90(img, k))


def grayscale(img: np.ndarray) -> np.ndarray:
    """BT.601 luma (round half up), replicated to all three channels."""
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"grayscale needs a 3-channel image, got shape {img.shape}")
    luma = img.astype(np.float64) @ _LUMA
    luma = np.floor(luma + 0.5).astype(np.uint8)
    return np.ascontiguousarray(np.repeat(luma[:, :, None], 3, axis=2))


def apply_tag(img: np.ndarray, tag: str) -> np.ndarray:
    if tag == "rot90":
        return rotate90k(img, 1)
    if tag == "rot180":
        return rotate90k(img, 2)
    if tag == "rot270":
        return rotate90k(img, 3)
    if tag == "grayscale":
        return grayscale(img)
    raise ValueError(f"unknown transform tag {tag!r}")


def _load_image(path: Path, tag: str) -> np.ndarray:
    with Image.open(path) as im:
        if tag == "grayscale" or im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        return np.asarray(im)


def _transform_one(src: Path, dst: Path, tag: str) -> None:
    dst.parent.mkdir(parents=True, exist_ok=True)
    if tag == IDENTITY:
        shutil.copyfile(src, dst)
        return
    arr = apply_tag(_load_image(src, tag), tag)
    mode = "L" if arr.ndim == 2 else "RGB"
    Image.fromarray(arr, mode=mode).save(dst, format="PNG")


def transform_dataset(input_dir, tag, output_dir, fail_fast=True, threads=1) -> int:
    """Transform every image under input_dir, mirroring relative paths.

    Files are visited in lexicographic order. Outputs are lossless: PNG
    for transformed images (non-PNG inputs get a .png suffix), verbatim
    byte copies for tag "identity". Undecodable files raise FormatError
    when fail_fast, otherwise they are logged and skipped. Returns the
    number of images written.
    """
    if tag not in TRANSFORM_TAGS:
        raise ValueError(f"unknown transform tag {tag!r}")
    input_dir = Path(input_dir)
    output_dir = Path(output_dir)
    files = sorted(p for p in input_dir.rglob("*") if p.is_file())

    def job(src: Path) -> bool:
        rel = src.relative_to(input_dir)
        if tag != IDENTITY and rel.suffix.lower() != ".png":
            rel = rel.with_suffix(".png")
        try:
            _transform_one(src, output_dir / rel, tag)
        except (UnidentifiedImageError, OSError, ValueError) as exc:
            if fail_fast:
                raise FormatError(f"cannot transform {src}: {exc}") from exc
            log.warning("skipping %s: %s", src, exc)
            return False
        return True

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, files))
    else:
        results = [job(f) for f in files]
    return sum(results)
