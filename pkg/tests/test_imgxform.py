"""Pixel-exact image transforms and the dataset walker."""

import numpy as np
import pytest
from PIL import Image

from eibench import FormatError, apply_tag, grayscale, rotate90k, transform_dataset


def test_rot90_2x2_permutation():
    img = np.array([[1, 2], [3, 4]], dtype=np.uint8)
    assert rotate90k(img, 1).tolist() == [[2, 4], [1, 3]]


def test_rotation_group_structure():
    rng = np.random.default_rng(11)
    img = rng.integers(0, 256, size=(13, 7, 3), dtype=np.uint8)
    once = rotate90k(img, 1)
    assert np.array_equal(rotate90k(once, 1), rotate90k(img, 2))
    assert np.array_equal(rotate90k(rotate90k(img, 2), 2), img)
    assert np.array_equal(
        rotate90k(rotate90k(rotate90k(rotate90k(img, 1), 1), 1), 1), img
    )
    assert np.array_equal(rotate90k(rotate90k(img, 1), 3), img)


def test_rotation_is_value_preserving_permutation():
    rng = np.random.default_rng(12)
    img = rng.integers(0, 256, size=(9, 16), dtype=np.uint8)
    for k in (1, 2, 3):
        out = rotate90k(img, k)
        assert out.dtype == np.uint8
        assert sorted(out.ravel().tolist()) == sorted(img.ravel().tolist())


def test_rotation_rejects_bad_k():
    img = np.zeros((2, 2), dtype=np.uint8)
    for k in (0, 4, -1, 7):
        with pytest.raises(ValueError):
            rotate90k(img, k)


def test_grayscale_reference_values():
    def lum(r, g, b):
        px = np.array([[[r, g, b]]], dtype=np.uint8)
        out = grayscale(px)
        assert out.shape == (1, 1, 3)
        assert len(set(out.ravel().tolist())) == 1
        return int(out[0, 0, 0])

    assert lum(128, 128, 128) == 128
    assert lum(255, 0, 0) == 76
    assert lum(0, 255, 0) == 150
    assert lum(0, 0, 255) == 29
    assert lum(255, 255, 255) == 255
    assert lum(0, 0, 0) == 0


def test_grayscale_idempotent():
    rng = np.random.default_rng(13)
    img = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
    once = grayscale(img)
    assert np.array_equal(grayscale(once), once)


def test_grayscale_rejects_non_rgb():
    with pytest.raises(ValueError):
        grayscale(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(ValueError):
        grayscale(np.zeros((4, 4, 1), dtype=np.uint8))
    with pytest.raises(ValueError):
        grayscale(np.zeros((4, 4, 4), dtype=np.uint8))


def test_apply_tag_dispatch():
    img = np.arange(12, dtype=np.uint8).reshape(2, 2, 3)
    assert np.array_equal(apply_tag(img, "rot90"), rotate90k(img, 1))
    assert np.array_equal(apply_tag(img, "rot180"), rotate90k(img, 2))
    assert np.array_equal(apply_tag(img, "rot270"), rotate90k(img, 3))
    assert np.array_equal(apply_tag(img, "grayscale"), grayscale(img))
    with pytest.raises(ValueError):
        apply_tag(img, "flip")


def _write_png(path, arr):
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "L" if arr.ndim == 2 else "RGB"
    Image.fromarray(arr, mode=mode).save(path, format="PNG")


def _read_png(path):
    with Image.open(path) as im:
        return np.asarray(im)


def test_transform_dataset_pixel_exact(tmp_path):
    rng = np.random.default_rng(14)
    src = tmp_path / "in"
    imgs = {}
    for name in ["a.png", "sub/b.png", "sub/deep/c.png"]:
        arr = rng.integers(0, 256, size=(6, 4, 3), dtype=np.uint8)
        _write_png(src / name, arr)
        imgs[name] = arr

    for tag in ["rot90", "rot180", "rot270", "grayscale"]:
        out = tmp_path / f"out_{tag}"
        count = transform_dataset(src, tag, out)
        assert count == 3
        for name, arr in imgs.items():
            got = _read_png(out / name)
            assert np.array_equal(got, apply_tag(arr, tag)), (tag, name)


def test_transform_dataset_identity_is_verbatim_copy(tmp_path):
    rng = np.random.default_rng(15)
    src = tmp_path / "in"
    _write_png(src / "a.png", rng.integers(0, 256, size=(5, 5, 3), dtype=np.uint8))
    (src / "b.jpg").write_bytes(b"not really a jpeg")  # identity never decodes
    out = tmp_path / "out"
    assert transform_dataset(src, "identity", out) == 2
    assert (out / "a.png").read_bytes() == (src / "a.png").read_bytes()
    assert (out / "b.jpg").read_bytes() == b"not really a jpeg"


def test_transform_dataset_empty_dir(tmp_path):
    src = tmp_path / "in"
    src.mkdir()
    assert transform_dataset(src, "rot90", tmp_path / "out") == 0


def test_transform_dataset_fail_fast_vs_skip(tmp_path):
    rng = np.random.default_rng(16)
    src = tmp_path / "in"
    _write_png(src / "good.png", rng.integers(0, 256, size=(4, 4, 3), dtype=np.uint8))
    (src / "broken.png").write_bytes(b"\x89PNG\r\n\x1a\ngarbage")
    with pytest.raises(FormatError, match="broken.png"):
        transform_dataset(src, "rot90", tmp_path / "out1")
    count = transform_dataset(src, "rot90", tmp_path / "out2", fail_fast=False)
    assert count == 1
    assert (tmp_path / "out2" / "good.png").exists()
    assert not (tmp_path / "out2" / "broken.png").exists()


def test_transform_dataset_threads_match_serial(tmp_path):
    rng = np.random.default_rng(17)
    src = tmp_path / "in"
    for i in range(8):
        arr = rng.integers(0, 256, size=(7, 3, 3), dtype=np.uint8)
        _write_png(src / f"img{i}.png", arr)
    out1 = tmp_path / "serial"
    out4 = tmp_path / "pooled"
    assert transform_dataset(src, "rot180", out1, threads=1) == 8
    assert transform_dataset(src, "rot180", out4, threads=4) == 8
    for i in range(8):
        a = (out1 / f"img{i}.png").read_bytes()
        b = (out4 / f"img{i}.png").read_bytes()
        assert a == b


def test_transform_dataset_renames_non_png_outputs(tmp_path):
    rng = np.random.default_rng(18)
    src = tmp_path / "in"
    src.mkdir()
    arr = rng.integers(0, 256, size=(5, 5, 3), dtype=np.uint8)
    Image.fromarray(arr, mode="RGB").save(src / "x.bmp", format="BMP")
    assert transform_dataset(src, "rot90", tmp_path / "out") == 1
    assert (tmp_path / "out" / "x.png").exists()
    assert np.array_equal(_read_png(tmp_path / "out" / "x.png"), rotate90k(arr, 1))


def test_transform_dataset_rejects_unknown_tag(tmp_path):
    src = tmp_path / "in"
    src.mkdir()
    with pytest.raises(ValueError):
        transform_dataset(src, "blur", tmp_path / "out")


def test_grayscale_of_l_mode_png_roundtrip(tmp_path):
    # 1-channel files on disk load as (H, W); pipeline converts to RGB first
    rng = np.random.default_rng(19)
    arr = rng.integers(0, 256, size=(6, 6), dtype=np.uint8)
    src = tmp_path / "in"
    _write_png(src / "gray.png", arr)
    out = tmp_path / "out"
    assert transform_dataset(src, "grayscale", out) == 1
    got = _read_png(out / "gray.png")
    assert got.shape == (6, 6, 3)
    assert np.array_equal(got[:, :, 0], arr)
    assert np.array_equal(got[:, :, 1], arr)
    assert np.array_equal(got[:, :, 2], arr)
