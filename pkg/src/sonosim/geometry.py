"""Beam geometry for a convex (sector) probe.

All polar-grid images in this package are indexed ``[scanline, axial_sample]``.
Scanline ``s`` points along angle ``theta_s``, evenly spaced over the sector
field of view; axial sample ``z`` sits at depth ``z * depth_cm / (axial_samples - 1)``
below the transducer face.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BeamGeometry:
    """Sector-probe sampling grid and transducer parameters."""

    scanline_count: int = 128
    axial_samples: int = 512
    fov_deg: float = 70.0
    depth_cm: float = 15.0
    apex_frac: float = 0.25  # top arc width as a fraction of the bottom arc width
    frequency_mhz: float = 8.0

    def __post_init__(self):
        if self.scanline_count < 1 or self.axial_samples < 1:
            raise ValueError("grid dimensions must be >= 1")
        if not 0.0 < self.fov_deg < 180.0:
            raise ValueError("fov_deg must lie in (0, 180)")
        if self.depth_cm <= 0.0:
            raise ValueError("depth_cm must be positive")
        if not 0.0 < self.apex_frac < 1.0:
            raise ValueError("apex_frac must lie in (0, 1)")

    @property
    def fov_rad(self):
        return np.deg2rad(self.fov_deg)

    @property
    def axial_step_cm(self):
        return self.depth_cm / self.axial_samples

    @property
    def apex_radius_cm(self):
        """Distance from the virtual apex to the transducer face.

        Chosen so the top arc chord spans ``apex_frac`` of the bottom arc
        chord: r0 = f / (1 - f) * depth.
        """
        return self.apex_frac / (1.0 - self.apex_frac) * self.depth_cm

    def scanline_angles(self):
        """Angles (radians) of all scanlines, symmetric about the axis."""
        if self.scanline_count == 1:
            return np.zeros(1)
        return np.linspace(-self.fov_rad / 2, self.fov_rad / 2, self.scanline_count)


# Speed of sound is held constant; beam paths are straight rays.
SPEED_OF_SOUND_M_S = 1540.0

# Hard cap on the normalized carrier so the RF cosine stays well below
# Nyquist on coarse desk-scale axial grids.
MAX_CARRIER_CYCLES_PER_SAMPLE = 0.25


def carrier_cycles_per_sample(geometry):
    """Normalized RF carrier frequency (cycles per axial sample).

    Derived from the pulse-echo wavelength at the transducer frequency and
    clamped to stay resolvable on the axial grid.  Envelope detection must
    demodulate at this exact frequency.
    """
    dz_m = geometry.depth_cm * 1e-2 / geometry.axial_samples
    wavelength_m = SPEED_OF_SOUND_M_S / (geometry.frequency_mhz * 1e6)
    return min(MAX_CARRIER_CYCLES_PER_SAMPLE, 2.0 * dz_m / wavelength_m)


def default_geometry():
    """Desk-scale default: 70° sector, 15 cm depth, 8 MHz probe."""
    return BeamGeometry()


def paper_scale_geometry():
    """Full-scale grid (3072 axial samples) for reference runs."""
    return BeamGeometry(scanline_count=512, axial_samples=3072)
