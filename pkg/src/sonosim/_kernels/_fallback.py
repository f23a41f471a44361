"""Pure-numpy implementations of the simulation kernels."""

import numpy as np


def transmission_and_boundaries(mu, impedance, boundary_gain):
    """Round-trip transmission and boundary echo terms for all scanlines.

    Parameters
    ----------
    mu : (S, Z) per-sample intensity attenuation constants
    impedance : (S, Z) per-sample acoustic impedance
    boundary_gain : scalar applied to the reflection coefficient

    Returns
    -------
    transmission : (S, Z) T[s, z] = exp(-2 * sum_{i<=z} mu[s, i]) scaled by
        the cumulative (1 - R) of every boundary at index <= z
    boundary_term : (S, Z) boundary_gain * R at label-change samples, else 0
    """
    mu = np.asarray(mu, dtype=np.float64)
    impedance = np.asarray(impedance, dtype=np.float64)
    r = np.zeros_like(mu)
    z1 = impedance[:, :-1]
    z2 = impedance[:, 1:]
    changed = z1 != z2
    coeff = np.zeros_like(z1)
    np.divide((z2 - z1) ** 2, (z2 + z1) ** 2, out=coeff, where=changed)
    r[:, 1:] = coeff
    transmission = np.exp(-2.0 * np.cumsum(mu, axis=1))
    transmission *= np.cumprod(1.0 - r, axis=1)
    return transmission, boundary_gain * r


def sample_polar(img, u, z, nearest=False):
    """Sample a polar grid at fractional (scanline, axial) coordinates.

    Coordinates are clamped to the grid; ``nearest`` switches from bilinear
    to nearest-neighbor (mandatory for label maps).
    """
    img = np.asarray(img, dtype=np.float64)
    s_count, z_count = img.shape
    u = np.clip(u, 0.0, s_count - 1.0)
    z = np.clip(z, 0.0, z_count - 1.0)
    if nearest:
        # round half up, matching the compiled kernel
        return img[np.floor(u + 0.5).astype(np.intp), np.floor(z + 0.5).astype(np.intp)]
    u0 = np.floor(u).astype(np.intp)
    z0 = np.floor(z).astype(np.intp)
    u1 = np.minimum(u0 + 1, s_count - 1)
    zb = np.minimum(z0 + 1, z_count - 1)
    fu = u - u0
    fz = z - z0
    top = img[u0, z0] * (1.0 - fz) + img[u0, zb] * fz
    bot = img[u1, z0] * (1.0 - fz) + img[u1, zb] * fz
    return top * (1.0 - fu) + bot * fu


def depth_lateral_blur(img, sigmas):
    """Blur each depth row across scanlines with its own Gaussian width.

    ``img`` is (S, Z); ``sigmas[z]`` is the lateral Gaussian sigma (in
    scanline units) applied at axial index z.  Kernels are normalized, so a
    constant image is preserved; sigma <= 0 leaves the row untouched.
    """
    img = np.asarray(img, dtype=np.float64)
    sigmas = np.asarray(sigmas, dtype=np.float64)
    out = np.empty_like(img)
    for z in range(img.shape[1]):
        sigma = sigmas[z]
        if sigma <= 0.0:
            out[:, z] = img[:, z]
            continue
        radius = max(1, int(np.ceil(3.0 * sigma)))
        k = np.arange(-radius, radius + 1)
        kernel = np.exp(-0.5 * (k / sigma) ** 2)
        kernel /= kernel.sum()
        # reflect padding keeps edge amplitude comparable to the interior
        padded = np.pad(img[:, z], radius, mode="reflect")
        out[:, z] = np.convolve(padded, kernel, mode="valid")
    return out
