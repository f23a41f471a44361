import os

import numpy as np
import pytest

from sonosim import dataset, phantom, rawio
from sonosim.attenmap import attenuation_integral, normalize_98
from sonosim.acoustics import PolarImage
from sonosim.dataset import (
    DatasetManifest, ManifestError, SampleTuple, build_sample, crop_patches,
    read_manifest, read_sample, split, validate_manifest, write_manifest,
    write_sample,
)
from sonosim.geometry import BeamGeometry
from sonosim.scanconvert import scan_convert

OUT = (96, 128)


@pytest.fixture(scope="module")
def geometry():
    return BeamGeometry(scanline_count=48, axial_samples=192)


@pytest.fixture(scope="module")
def sample(geometry):
    return build_sample(phantom.bone_inclusion_spec(), geometry, seed=11,
                        out_size=OUT)


def random_tuple(rng, idx, shape=(40, 56)):
    return SampleTuple(
        x=rng.uniform(0, 255, shape), y=rng.uniform(0, 255, shape),
        s=rng.integers(0, 4, shape).astype(float),
        a=rng.uniform(0, 1, shape),
        m=(rng.random(shape) > 0.3).astype(float),
        sample_id=f"t{idx:03d}", seed=idx,
    )


# -- raw format ---------------------------------------------------------------

def test_raw_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    for i in range(5):
        data = rng.standard_normal((17, 23)).astype(np.float32)
        path = tmp_path / f"f{i}.raw"
        rawio.write_raw(path, data)
        back = rawio.read_raw(path)
        assert back.dtype == np.float32
        assert np.array_equal(back, data)


def test_raw_truncation_detected(tmp_path):
    path = tmp_path / "t.raw"
    rawio.write_raw(path, np.ones((8, 8), dtype=np.float32))
    blob = path.read_bytes()
    path.write_bytes(blob[:-10])
    with pytest.raises(rawio.ChecksumError):
        rawio.read_raw(path)


def test_raw_corruption_detected(tmp_path):
    path = tmp_path / "c.raw"
    rawio.write_raw(path, np.ones((8, 8), dtype=np.float32))
    blob = bytearray(path.read_bytes())
    blob[30] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(rawio.ChecksumError):
        rawio.read_raw(path)


def test_raw_bad_magic(tmp_path):
    path = tmp_path / "m.raw"
    path.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(rawio.MalformedHeaderError):
        rawio.read_raw(path)


# -- sample assembly ----------------------------------------------------------

def test_build_sample_deterministic(geometry, sample):
    again = build_sample(phantom.bone_inclusion_spec(), geometry, seed=11,
                         out_size=OUT)
    for ch in dataset.CHANNELS:
        assert np.array_equal(getattr(sample, ch), getattr(again, ch))


def test_segmentation_label_conservation(geometry, sample):
    tm = phantom.generate_phantom(phantom.bone_inclusion_spec(), geometry)
    mask = sample.m > 0.5
    assert set(np.unique(sample.s[mask])) <= set(np.unique(tm.labels).astype(float))


def test_attenuation_channel_matches_recomputation(geometry, sample):
    tm = phantom.generate_phantom(phantom.bone_inclusion_spec(), geometry)
    att = normalize_98(attenuation_integral(tm))
    polar = PolarImage(samples=np.asarray(att.values), geometry=geometry)
    expected = scan_convert(polar, OUT, "bilinear").pixels
    assert np.array_equal(sample.a, expected)


def test_tuple_invariants(sample):
    assert sample.x.min() >= 0 and sample.x.max() <= 255
    assert sample.y.min() >= 0 and sample.y.max() <= 255
    assert sample.a.min() >= 0 and sample.a.max() <= 1
    assert np.array_equal(sample.s, np.round(sample.s))
    assert set(np.unique(sample.m)) <= {0.0, 1.0}


def test_channel_shape_mismatch_rejected():
    with pytest.raises(rawio.DimensionMismatchError):
        SampleTuple(x=np.zeros((4, 4)), y=np.zeros((4, 4)), s=np.zeros((4, 4)),
                    a=np.zeros((4, 4)), m=np.zeros((4, 5)),
                    sample_id="bad", seed=0)


# -- cropping -----------------------------------------------------------------

def test_crop_count_and_alignment(sample):
    patches = crop_patches(sample, patch_size=48, count=4, seed=5)
    assert len(patches) == 4
    for p in patches:
        for ch in dataset.CHANNELS:
            assert getattr(p, ch).shape == (48, 48)


def test_crop_windows_identical_across_channels(sample):
    # plant a coordinate pattern in every channel; aligned crops must carry
    # identical offsets
    h, w = sample.x.shape
    coord = np.arange(h * w, dtype=float).reshape(h, w)
    probe = SampleTuple(x=coord, y=coord, s=coord, a=coord, m=np.ones((h, w)),
                        sample_id="probe", seed=0)
    for seed in range(100):
        (patch,) = crop_patches(probe, patch_size=32, count=1, seed=seed)
        for ch in ("y", "s", "a"):
            assert np.array_equal(getattr(patch, ch), patch.x)


def test_identity_crop(sample):
    h, w = sample.x.shape
    assert h != w
    (patch,) = crop_patches(sample, patch_size=min(h, w), count=1, seed=0)
    assert patch.x.shape == (min(h, w), min(h, w))
    # a full-image crop needs a square image
    square = SampleTuple(x=sample.x[:h, :h], y=sample.y[:h, :h],
                         s=sample.s[:h, :h], a=sample.a[:h, :h],
                         m=sample.m[:h, :h], sample_id="sq", seed=0)
    (ident,) = crop_patches(square, patch_size=h, count=1, seed=1)
    assert np.array_equal(ident.x, square.x)


def test_crop_too_large_rejected(sample):
    with pytest.raises(ValueError):
        crop_patches(sample, patch_size=4096, count=1, seed=0)


def test_crop_mask_intersection(sample):
    for seed in range(20):
        patches = crop_patches(sample, patch_size=48, count=2, seed=seed,
                               min_mask_frac=0.25)
        for p in patches:
            assert p.m.mean() >= 0.25


# -- persistence --------------------------------------------------------------

def test_write_read_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    root = str(tmp_path)
    records = []
    originals = []
    for i in range(5):
        t = random_tuple(rng, i)
        originals.append(t)
        records.append(write_sample(root, t))
    manifest = DatasetManifest(root=root, records=records)
    write_manifest(manifest)
    back = read_manifest(root)
    validate_manifest(back)
    for orig, rec in zip(originals, back.records):
        loaded = read_sample(root, rec)
        for ch in dataset.CHANNELS:
            # float32 storage: round-trip is bit-exact at float32 precision
            assert np.array_equal(getattr(loaded, ch),
                                  getattr(orig, ch).astype(np.float32).astype(np.float64))


def test_manifest_missing_file(tmp_path):
    rng = np.random.default_rng(2)
    root = str(tmp_path)
    rec = write_sample(root, random_tuple(rng, 0))
    manifest = DatasetManifest(root=root, records=[rec])
    write_manifest(manifest)
    victim = os.path.join(root, rec.files["a"])
    os.remove(victim)
    with pytest.raises(ManifestError, match="a.raw"):
        validate_manifest(read_manifest(root))


# -- splitting ----------------------------------------------------------------

def make_manifest(n):
    records = [dataset.ManifestRecord(sample_id=f"s{i}", files={}) for i in range(n)]
    return DatasetManifest(root="/nonexistent", records=records)


def test_split_counts():
    manifest = split(make_manifest(100), train_count=90, seed=0)
    assert len(manifest.split_records("train")) == 90
    assert len(manifest.split_records("eval")) == 10


def test_split_zero_train():
    manifest = split(make_manifest(10), train_count=0, seed=0)
    assert len(manifest.split_records("eval")) == 10


def test_split_deterministic():
    a = split(make_manifest(50), train_count=40, seed=3)
    b = split(make_manifest(50), train_count=40, seed=3)
    assert ([r.split for r in a.records] == [r.split for r in b.records])


def test_split_partition_exhaustive():
    manifest = split(make_manifest(37), train_count=20, seed=1)
    splits = [r.split for r in manifest.records]
    assert splits.count("train") + splits.count("eval") == 37


def test_split_requires_room():
    with pytest.raises(ValueError):
        split(make_manifest(5), train_count=5, seed=0)
