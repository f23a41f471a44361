"""Raw float image format shared with the trainer.

Layout (little-endian throughout):

    bytes 0-3    magic  b"SSRF"
    bytes 4-7    format version (uint32, currently 1)
    bytes 8-11   height (uint32)
    bytes 12-15  width  (uint32)
    then         height * width float32 values, row-major
    last 4 bytes CRC32 of header + payload (uint32)

The format is lossless for float32 data and trivially parseable from any
language.
"""

import struct
import zlib

import numpy as np

MAGIC = b"SSRF"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


class RawIOError(Exception):
    """Base class for raw-format failures."""


class MalformedHeaderError(RawIOError):
    pass


class DimensionMismatchError(RawIOError):
    pass


class ChecksumError(RawIOError):
    pass


def write_raw(path, array):
    """Write a 2D float32 array in the raw format."""
    array = np.ascontiguousarray(array, dtype="<f4")
    if array.ndim != 2:
        raise DimensionMismatchError(f"expected a 2D array, got shape {array.shape}")
    header = _HEADER.pack(MAGIC, VERSION, array.shape[0], array.shape[1])
    payload = array.tobytes()
    checksum = zlib.crc32(header + payload) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
        fh.write(struct.pack("<I", checksum))


def read_raw(path):
    """Read a raw file back as a float32 array; verifies the checksum."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size + 4:
        raise MalformedHeaderError(f"{path}: file too short for a header")
    magic, version, height, width = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise MalformedHeaderError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise MalformedHeaderError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + height * width * 4 + 4
    if len(blob) != expected:
        # truncated or padded payload; the checksum cannot be located
        raise ChecksumError(
            f"{path}: {len(blob)} bytes on disk, header implies {expected}")
    stored = struct.unpack_from("<I", blob, len(blob) - 4)[0]
    actual = zlib.crc32(blob[:-4]) & 0xFFFFFFFF
    if stored != actual:
        raise ChecksumError(f"{path}: checksum mismatch")
    data = np.frombuffer(blob, dtype="<f4", count=height * width,
                         offset=_HEADER.size)
    return data.reshape(height, width).copy()
