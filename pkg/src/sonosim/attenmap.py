"""Attenuation integral maps used as conditioning inputs.

The map value at (scanline, depth) is the one-way intensity fraction
surviving the accumulated attenuation along the beam:
a[s][z] = exp(-sum_{i=0..z} mu(label[s][i])).  The simulation itself
attenuates echoes round-trip; the conditioning map deliberately stays
one-way.
"""

from dataclasses import dataclass

import numpy as np

from .acoustics import percentile


@dataclass(frozen=True)
class AttenuationMap:
    values: np.ndarray
    coords: str = "polar"            # "polar" | "cartesian"
    reference: float | None = None   # normalization reference, if normalized

    def __post_init__(self):
        if self.coords not in ("polar", "cartesian"):
            raise ValueError(f"unknown coordinate tag {self.coords!r}")
        self.values.setflags(write=False)


def attenuation_integral(tissue_map):
    """One-way accumulated attenuation map on the polar grid."""
    mu = tissue_map.property_grid("attenuation_mu")
    values = np.exp(-np.cumsum(mu, axis=1))
    return AttenuationMap(values=values, coords="polar")


def normalize_98(att):
    """Divide by the map's 98th-percentile value, then clamp to [0, 1]."""
    if att.coords != "polar":
        raise ValueError("normalize before scan conversion, on the polar map")
    ref = percentile(att.values, 98.0)
    if ref <= 0.0:
        return AttenuationMap(values=np.zeros_like(att.values),
                              coords=att.coords, reference=0.0)
    values = np.clip(att.values / ref, 0.0, 1.0)
    return AttenuationMap(values=values, coords=att.coords, reference=ref)
