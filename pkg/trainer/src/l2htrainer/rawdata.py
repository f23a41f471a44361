"""Reader/writer for the simulator's dataset interchange format.

Implemented from the documented on-disk contract (see the simulator
README): little-endian files with a 16-byte header (magic "SSRF",
version, height, width), float32 row-major payload, and a trailing CRC32
of header + payload; samples live in ``<root>/<sample_id>/{x,y,s,a,m}.raw``
indexed by ``manifest.json``.
"""

import json
import os
import struct
import zlib

import numpy as np

MAGIC = b"SSRF"
VERSION = 1
_HEADER = struct.Struct("<4sIII")
CHANNELS = ("x", "y", "s", "a", "m")


class DataFormatError(Exception):
    pass


def read_raw(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size + 4:
        raise DataFormatError(f"{path}: too short")
    magic, version, height, width = _HEADER.unpack_from(blob)
    if magic != MAGIC or version != VERSION:
        raise DataFormatError(f"{path}: bad magic/version")
    if len(blob) != _HEADER.size + height * width * 4 + 4:
        raise DataFormatError(f"{path}: size mismatch")
    stored = struct.unpack_from("<I", blob, len(blob) - 4)[0]
    if stored != (zlib.crc32(blob[:-4]) & 0xFFFFFFFF):
        raise DataFormatError(f"{path}: checksum failure")
    data = np.frombuffer(blob, dtype="<f4", count=height * width,
                         offset=_HEADER.size)
    return data.reshape(height, width).copy()


def write_raw(path, array):
    array = np.ascontiguousarray(array, dtype="<f4")
    header = _HEADER.pack(MAGIC, VERSION, array.shape[0], array.shape[1])
    payload = array.tobytes()
    checksum = zlib.crc32(header + payload) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
        fh.write(struct.pack("<I", checksum))


class Dataset:
    """Samples from one dataset root, filtered by split tag."""

    def __init__(self, root, split="train"):
        manifest_path = os.path.join(root, "manifest.json")
        if not os.path.exists(manifest_path):
            raise DataFormatError(f"no manifest.json in {root}")
        with open(manifest_path) as fh:
            manifest = json.load(fh)
        self.root = root
        self.records = [r for r in manifest["records"] if r["split"] == split]
        if not self.records:
            raise DataFormatError(f"manifest has no {split!r} records")

    def __len__(self):
        return len(self.records)

    def sample_ids(self):
        return [r["sample_id"] for r in self.records]

    def load(self, index):
        rec = self.records[index]
        return {ch: read_raw(os.path.join(self.root, rec["files"][ch]))
                for ch in CHANNELS}
