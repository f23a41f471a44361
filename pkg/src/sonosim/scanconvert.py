"""Polar-to-Cartesian scan conversion for a convex probe.

Output pixels are inverse-mapped through the sector geometry: pixel center
-> (angle, radius from the virtual apex) -> sample of the polar grid.
``beam_mask`` and ``scan_convert`` share the same in-sector predicate, so
the mask is exactly the support of the converted data.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .geometry import BeamGeometry

DEFAULT_OUT_SIZE = (512, 708)  # (height, width)


@dataclass(frozen=True)
class CartesianImage:
    pixels: np.ndarray           # (height, width)
    geometry: BeamGeometry
    pixel_pitch_cm: float

    def __post_init__(self):
        self.pixels.setflags(write=False)


@dataclass(frozen=True)
class BeamMask:
    pixels: np.ndarray           # (height, width), uint8 {0, 1}

    def __post_init__(self):
        self.pixels.setflags(write=False)


@lru_cache(maxsize=16)
def _sector_lookup(geometry, out_size):
    """Per-pixel (scanline coord, axial coord, inside) for the inverse map."""
    height, width = out_size
    if height < 1 or width < 1:
        raise ValueError("output size must be positive")
    r0 = geometry.apex_radius_cm
    r_outer = r0 + geometry.depth_cm
    half = geometry.fov_rad / 2.0
    width_cm = 2.0 * r_outer * np.sin(half)
    top_cm = r0 * np.cos(half)
    height_cm = r_outer - top_cm
    pitch = max(width_cm / width, height_cm / height)

    rows = np.arange(height)[:, None]
    cols = np.arange(width)[None, :]
    # center the sector inside the frame; y grows downward from the apex
    x_cm = (cols + 0.5) * pitch - (width * pitch) / 2.0
    y_cm = (rows + 0.5) * pitch + top_cm - (height * pitch - height_cm) / 2.0
    x_cm = np.broadcast_to(x_cm, (height, width))
    y_cm = np.broadcast_to(y_cm, (height, width))

    radius = np.hypot(x_cm, y_cm)
    theta = np.arctan2(x_cm, y_cm)
    depth = radius - r0
    inside = (np.abs(theta) <= half) & (depth >= 0.0) & (depth <= geometry.depth_cm)

    s_coord = (theta + half) / geometry.fov_rad * (geometry.scanline_count - 1)
    z_coord = depth / geometry.depth_cm * (geometry.axial_samples - 1)
    return s_coord, z_coord, inside, pitch


def scan_convert(img, out_size=DEFAULT_OUT_SIZE, interpolation="bilinear"):
    """Resample a polar image onto the Cartesian screen grid.

    ``interpolation`` is "bilinear" or "nearest"; nearest is mandatory for
    label maps.  Out-of-sector pixels are exactly 0.
    """
    if interpolation not in ("nearest", "bilinear"):
        raise ValueError(f"unknown interpolation {interpolation!r}")
    s_coord, z_coord, inside, pitch = _sector_lookup(img.geometry, tuple(out_size))
    pixels = np.zeros(tuple(out_size))
    sampled = _kernels.sample_polar(
        np.asarray(img.samples, dtype=np.float64),
        s_coord[inside], z_coord[inside],
        nearest=(interpolation == "nearest"),
    )
    pixels[inside] = sampled
    return CartesianImage(pixels=pixels, geometry=img.geometry, pixel_pitch_cm=pitch)


def beam_mask(geometry, out_size=DEFAULT_OUT_SIZE):
    """Binary sector mask; 1 exactly where scan_convert writes data."""
    _, _, inside, _ = _sector_lookup(geometry, tuple(out_size))
    return BeamMask(pixels=inside.astype(np.uint8))
