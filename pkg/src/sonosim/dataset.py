"""Dataset assembly and the on-disk contract shared with the trainer.

Each sample is five aligned grids: x (LQ B-mode), y (HQ B-mode),
s (segmentation labels), a (normalized attenuation integral map), and the
constant beam mask m.  On disk a sample is a directory
``<root>/<sample_id>/{x,y,s,a,m}.raw`` in the rawio format, indexed by
``manifest.json`` at the root.
"""

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from . import rawio
from .attenmap import attenuation_integral, normalize_98
from .acoustics import simulate_pair
from .phantom import generate_phantom
from .rawio import DimensionMismatchError
from .scanconvert import DEFAULT_OUT_SIZE

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1
CHANNELS = ("x", "y", "s", "a", "m")


class ManifestError(Exception):
    """Manifest references missing or inconsistent files."""


@dataclass(frozen=True)
class SampleTuple:
    x: np.ndarray   # LQ B-mode, [0, 255]
    y: np.ndarray   # HQ B-mode, [0, 255]
    s: np.ndarray   # segmentation labels, integer-valued
    a: np.ndarray   # attenuation integral map, [0, 1]
    m: np.ndarray   # beam mask, {0, 1}
    sample_id: str
    seed: int

    def __post_init__(self):
        shapes = {ch: getattr(self, ch).shape for ch in CHANNELS}
        if len(set(shapes.values())) != 1:
            raise DimensionMismatchError(f"channel shapes differ: {shapes}")

    def channels(self):
        return {ch: getattr(self, ch) for ch in CHANNELS}


@dataclass
class ManifestRecord:
    sample_id: str
    files: dict
    split: str = "unassigned"
    seed: int = 0
    crop: dict | None = None


@dataclass
class DatasetManifest:
    root: str
    records: list = field(default_factory=list)
    config_hash: str = ""
    format_version: int = MANIFEST_VERSION

    def record_for(self, sample_id):
        for rec in self.records:
            if rec.sample_id == sample_id:
                return rec
        raise ManifestError(f"no record for sample {sample_id!r}")

    def split_records(self, split):
        return [r for r in self.records if r.split == split]


def config_hash(config_dict):
    blob = json.dumps(config_dict, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def build_sample(spec, geometry, seed, sample_id=None, out_size=DEFAULT_OUT_SIZE,
                 properties=None):
    """Run the full pipeline for one phantom spec and seed."""
    from .scanconvert import beam_mask, scan_convert
    from .acoustics import PolarImage

    tissue_map = generate_phantom(spec, geometry, properties=properties)
    lq, hq = simulate_pair(tissue_map, seed)
    att = normalize_98(attenuation_integral(tissue_map))
    seg_polar = PolarImage(samples=tissue_map.labels.astype(np.float64),
                           geometry=geometry)
    att_polar = PolarImage(samples=np.asarray(att.values), geometry=geometry)
    mask = beam_mask(geometry, out_size)
    return SampleTuple(
        x=scan_convert(lq, out_size, "bilinear").pixels,
        y=scan_convert(hq, out_size, "bilinear").pixels,
        s=scan_convert(seg_polar, out_size, "nearest").pixels,
        a=scan_convert(att_polar, out_size, "bilinear").pixels,
        m=mask.pixels.astype(np.float64),
        sample_id=sample_id or f"sample_{seed:08d}",
        seed=seed,
    )


def crop_patches(sample, patch_size, count, seed, min_mask_frac=0.25,
                 max_tries=1000):
    """Cut ``count`` aligned random patches from all five channels.

    Windows must overlap the beam mask by at least ``min_mask_frac`` of
    their area.  The same window is applied to every channel.
    """
    height, width = sample.x.shape
    if patch_size > height or patch_size > width:
        raise ValueError(
            f"patch size {patch_size} exceeds image dimensions {height}x{width}")
    rng = np.random.default_rng(seed)
    patches = []
    tries = 0
    while len(patches) < count:
        tries += 1
        if tries > max_tries * count:
            raise RuntimeError("could not place patches intersecting the mask")
        r = int(rng.integers(0, height - patch_size + 1))
        c = int(rng.integers(0, width - patch_size + 1))
        window = np.s_[r:r + patch_size, c:c + patch_size]
        if sample.m[window].mean() < min_mask_frac:
            continue
        idx = len(patches)
        patches.append(SampleTuple(
            x=sample.x[window].copy(), y=sample.y[window].copy(),
            s=sample.s[window].copy(), a=sample.a[window].copy(),
            m=sample.m[window].copy(),
            sample_id=f"{sample.sample_id}_p{idx:02d}",
            seed=sample.seed,
        ))
    return patches


def split(manifest, train_count, seed):
    """Deterministically partition records into train/eval splits."""
    if train_count >= len(manifest.records):
        raise ValueError("train_count must be smaller than the record count")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(manifest.records))
    train_ids = {manifest.records[i].sample_id for i in order[:train_count]}
    for rec in manifest.records:
        rec.split = "train" if rec.sample_id in train_ids else "eval"
    return manifest


def write_sample(root, sample):
    """Persist one sample; returns its manifest record."""
    sample_dir = os.path.join(root, sample.sample_id)
    os.makedirs(sample_dir, exist_ok=True)
    files = {}
    for ch, data in sample.channels().items():
        rel = os.path.join(sample.sample_id, f"{ch}.raw")
        rawio.write_raw(os.path.join(root, rel), data)
        files[ch] = rel
    return ManifestRecord(sample_id=sample.sample_id, files=files,
                          seed=sample.seed)


def read_sample(root, record):
    """Load a sample back from its manifest record."""
    channels = {}
    shape = None
    for ch in CHANNELS:
        path = os.path.join(root, record.files[ch])
        if not os.path.exists(path):
            raise ManifestError(f"missing file: {path}")
        data = rawio.read_raw(path).astype(np.float64)
        if shape is None:
            shape = data.shape
        elif data.shape != shape:
            raise DimensionMismatchError(
                f"{path}: shape {data.shape} differs from {shape}")
        channels[ch] = data
    return SampleTuple(sample_id=record.sample_id, seed=record.seed, **channels)


def export_preview(sample, path):
    """8-bit grayscale previews of the B-mode channels, for inspection."""
    os.makedirs(path, exist_ok=True)
    for ch in ("x", "y"):
        img = np.clip(getattr(sample, ch), 0, 255).astype(np.uint8)
        Image.fromarray(img).save(os.path.join(path, f"{sample.sample_id}_{ch}.png"))


def write_manifest(manifest):
    payload = {
        "format_version": manifest.format_version,
        "config_hash": manifest.config_hash,
        "records": [dataclasses.asdict(rec) for rec in manifest.records],
    }
    path = os.path.join(manifest.root, MANIFEST_NAME)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2)
    os.replace(tmp, path)
    return path


def read_manifest(root):
    path = os.path.join(root, MANIFEST_NAME)
    if not os.path.exists(path):
        raise ManifestError(f"no {MANIFEST_NAME} in {root}")
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format_version") != MANIFEST_VERSION:
        raise ManifestError(
            f"unsupported manifest version {payload.get('format_version')}")
    records = [ManifestRecord(**rec) for rec in payload["records"]]
    return DatasetManifest(root=root, records=records,
                           config_hash=payload.get("config_hash", ""),
                           format_version=payload["format_version"])


def validate_manifest(manifest):
    """Check that every referenced file exists and parses."""
    for rec in manifest.records:
        for ch, rel in rec.files.items():
            path = os.path.join(manifest.root, rel)
            if not os.path.exists(path):
                raise ManifestError(f"missing file: {path}")
    splits = {rec.split for rec in manifest.records}
    if "unassigned" in splits and len(splits) > 1:
        raise ManifestError("mixed assigned and unassigned split tags")
