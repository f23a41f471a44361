"""Per-scanline ray marching, speckle synthesis, and B-mode post-processing.

The simulation produces paired low/high-quality polar images from one
tissue map: the LQ pass uses a single unjittered ray per scanline and one
elevational layer; the HQ pass averages many jittered rays over several
independent elevational scatterer planes.  Layer 0 / ray 0 is shared
between the passes so the pair stays pixel-aligned.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import BeamGeometry, carrier_cycles_per_sample

# Post-processing constants (the processing chain is fixed, the stages are
# standard B-mode: envelope, TGC, log compression).
DYNAMIC_RANGE_DB = 60.0
ENV_REF_PERCENTILE = 98.0
BOUNDARY_GAIN = 4.0

# PSF shape: axial Gaussian envelope in carrier periods, lateral Gaussian
# whose sigma (in scanline units) grows linearly from top to bottom.
AXIAL_SIGMA_PERIODS = 1.5
LATERAL_SIGMA_TOP = 0.75
LATERAL_SIGMA_BOTTOM = 2.5


@dataclass(frozen=True)
class SimQuality:
    rays_per_scanline: int
    elevational_layers: int

    def __post_init__(self):
        if self.rays_per_scanline < 1 or self.elevational_layers < 1:
            raise ValueError("quality settings must be positive")


LQ_PRESET = SimQuality(rays_per_scanline=1, elevational_layers=1)
HQ_PRESET = SimQuality(rays_per_scanline=32, elevational_layers=3)


@dataclass(frozen=True)
class PolarImage:
    samples: np.ndarray  # (scanlines, axial)
    geometry: BeamGeometry

    def __post_init__(self):
        expected = (self.geometry.scanline_count, self.geometry.axial_samples)
        if self.samples.shape != expected:
            raise ValueError(f"image {self.samples.shape} does not match geometry {expected}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("polar image contains non-finite values")
        self.samples.setflags(write=False)


@dataclass(frozen=True)
class RayResult:
    echo: np.ndarray          # per-sample echo amplitude
    transmission: np.ndarray  # per-sample cumulative transmission factor


def scatterer_field(tissue_map, layer_seed):
    """One random scatterer amplitude realization for the whole grid.

    Each cell carries a scatterer with the label's density probability; the
    amplitude is drawn from the label's Gaussian.  Deterministic per
    (tissue_map, layer_seed).
    """
    rng = np.random.default_rng(layer_seed)
    shape = tissue_map.labels.shape
    occupied = rng.random(shape) < tissue_map.property_grid("scatterer_density")
    amplitudes = (tissue_map.property_grid("scatterer_mean")
                  + tissue_map.property_grid("scatterer_std") * rng.standard_normal(shape))
    return np.where(occupied, amplitudes, 0.0)


def _transmission_grid(tissue_map):
    mu = tissue_map.property_grid("attenuation_mu")
    impedance = tissue_map.property_grid("impedance")
    return _kernels.transmission_and_boundaries(mu, impedance, BOUNDARY_GAIN)


def march_ray(tissue_map, scanline_index, lateral_jitter, scatterers):
    """March one ray down a scanline.

    Returns per-sample echo amplitudes and the cumulative round-trip
    transmission.  ``lateral_jitter`` (in scanline widths, |j| <= 0.5) shifts
    scatterer sampling by linear interpolation toward the neighboring
    scanline; tissue labels are taken from the nearest scanline.
    """
    s_count = tissue_map.geometry.scanline_count
    if not 0 <= scanline_index < s_count:
        raise IndexError(f"scanline {scanline_index} out of range")
    if abs(lateral_jitter) > 0.5:
        raise ValueError("lateral jitter must satisfy |j| <= 0.5 scanline widths")
    transmission, bterm = _transmission_grid(tissue_map)
    scat = _sample_scatterer_column(scatterers, scanline_index, lateral_jitter)
    echo = transmission[scanline_index] * (scat + bterm[scanline_index])
    return RayResult(echo=echo, transmission=transmission[scanline_index].copy())


def _sample_scatterer_column(scatterers, scanline_index, jitter):
    s_count = scatterers.shape[0]
    if jitter == 0.0:
        return scatterers[scanline_index]
    neighbor = min(max(scanline_index + (1 if jitter > 0 else -1), 0), s_count - 1)
    w = abs(jitter)
    return (1.0 - w) * scatterers[scanline_index] + w * scatterers[neighbor]


def _shifted_scatterers(scatterers, jitter):
    """Apply one lateral jitter to every scanline at once (vectorized)."""
    if jitter == 0.0:
        return scatterers
    shifted = np.roll(scatterers, -1 if jitter > 0 else 1, axis=0)
    # clamp at the sector edges instead of wrapping
    if jitter > 0:
        shifted[-1] = scatterers[-1]
    else:
        shifted[0] = scatterers[0]
    w = abs(jitter)
    return (1.0 - w) * scatterers + w * shifted


def _layer_seed(seed, layer, ray):
    return np.random.SeedSequence(entropy=seed, spawn_key=(layer, ray))


def _psf_axial_kernel(geometry):
    f_c = carrier_cycles_per_sample(geometry)
    sigma = AXIAL_SIGMA_PERIODS / f_c
    radius = int(np.ceil(3.0 * sigma))
    k = np.arange(-radius, radius + 1)
    kernel = np.exp(-0.5 * (k / sigma) ** 2) * np.cos(2.0 * np.pi * f_c * k)
    return kernel


def _psf_lateral_sigmas(geometry):
    z = np.arange(geometry.axial_samples)
    frac = z / max(geometry.axial_samples - 1, 1)
    return LATERAL_SIGMA_TOP + (LATERAL_SIGMA_BOTTOM - LATERAL_SIGMA_TOP) * frac


def apply_psf(echo, geometry):
    """Convolve the echo grid with the depth-dependent point spread function.

    Separable: Gaussian-envelope cosine carrier along the axial axis, then a
    lateral Gaussian blur per depth row with linearly growing width.
    """
    axial = _psf_axial_kernel(geometry)
    radius = len(axial) // 2
    rf = np.empty_like(echo, dtype=np.float64)
    for s in range(echo.shape[0]):
        padded = np.pad(echo[s], radius, mode="constant")
        rf[s] = np.convolve(padded, axial, mode="valid")
    return _kernels.depth_lateral_blur(rf, _psf_lateral_sigmas(geometry))


def simulate_rf(tissue_map, quality, seed):
    """Average jittered rays over elevational layers, then apply the PSF.

    Each (layer, ray) pair marches through its own scatterer realization —
    the grid discretizes a continuum of sub-resolution scatterers, so
    distinct ray paths see independent speckle.  (layer 0, ray 0) is the
    shared unjittered realization, which makes an LQ pass a strict subset of
    the HQ pass for the same seed.
    """
    geometry = tissue_map.geometry
    transmission, bterm = _transmission_grid(tissue_map)
    accum = np.zeros_like(transmission)
    for layer in range(quality.elevational_layers):
        for ray in range(quality.rays_per_scanline):
            scat = scatterer_field(tissue_map, _layer_seed(seed, layer, ray))
            if ray == 0:
                jitter = 0.0
            else:
                jrng = np.random.default_rng(
                    np.random.SeedSequence(entropy=seed, spawn_key=(layer, ray, 1)))
                jitter = float(jrng.uniform(-0.5, 0.5))
            accum += _shifted_scatterers(scat, jitter)
    accum /= quality.elevational_layers * quality.rays_per_scanline
    echo = transmission * (accum + bterm)
    return PolarImage(samples=apply_psf(echo, geometry), geometry=geometry)


def envelope(rf, geometry):
    """Envelope via quadrature demodulation at the carrier frequency."""
    f_c = carrier_cycles_per_sample(geometry)
    z = np.arange(rf.shape[1])
    mixed = rf * np.exp(-2j * np.pi * f_c * z)[None, :]
    sigma = 2.0 / f_c / (2.0 * np.pi)  # passes DC, kills the 2f image
    radius = int(np.ceil(4.0 * sigma))
    k = np.arange(-radius, radius + 1)
    lp = np.exp(-0.5 * (k / sigma) ** 2)
    lp /= lp.sum()
    out = np.empty_like(rf, dtype=np.complex128)
    for s in range(rf.shape[0]):
        padded = np.pad(mixed[s], radius, mode="reflect")
        out[s] = np.convolve(padded, lp, mode="valid")
    return 2.0 * np.abs(out)


def post_process(rf_image, tissue_map):
    """Envelope detection, TGC, log compression to display range [0, 255].

    TGC compensates only the background tissue's mean attenuation so
    differential shadows survive.  Log compression is anchored at the
    image's 98th-percentile envelope value with a 60 dB dynamic range.
    """
    geometry = rf_image.geometry
    env = envelope(np.asarray(rf_image.samples, dtype=np.float64), geometry)
    mu_ref = tissue_map.properties[tissue_map.background_label].attenuation_mu
    z = np.arange(geometry.axial_samples)
    env = env * np.exp(2.0 * z * mu_ref)[None, :]
    env_ref = percentile(env, ENV_REF_PERCENTILE)
    if env_ref <= 0.0:
        return PolarImage(samples=np.zeros_like(env), geometry=geometry)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(env / env_ref, out=np.full_like(env, -np.inf),
                             where=env > 0)
    db = np.clip(db, -DYNAMIC_RANGE_DB, 0.0)
    display = (db + DYNAMIC_RANGE_DB) / DYNAMIC_RANGE_DB * 255.0
    return PolarImage(samples=display, geometry=geometry)


def percentile(values, q):
    """Percentile convention used across the package (type-4, interpolated)."""
    return float(np.percentile(np.asarray(values).ravel(), q,
                               method="interpolated_inverted_cdf"))


def simulate_pair(tissue_map, seed):
    """Simulate the pixel-aligned (LQ, HQ) B-mode pair for one phantom."""
    lq_rf = simulate_rf(tissue_map, LQ_PRESET, seed)
    hq_rf = simulate_rf(tissue_map, HQ_PRESET, seed)
    return post_process(lq_rf, tissue_map), post_process(hq_rf, tissue_map)
