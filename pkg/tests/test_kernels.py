"""Parity between the compiled kernels and the numpy fallback."""

import numpy as np
import pytest

from sonosim._kernels import BACKEND, _fallback

try:
    from sonosim._kernels import _core
except ImportError:
    _core = None

needs_ext = pytest.mark.skipif(_core is None, reason="compiled core not built")


@needs_ext
def test_transmission_parity():
    rng = np.random.default_rng(0)
    mu = rng.uniform(0.0, 0.1, size=(16, 200))
    imp = rng.choice([1.4, 1.63, 7.8], size=(16, 200))
    t_py, b_py = _fallback.transmission_and_boundaries(mu, imp, 4.0)
    t_c, b_c = _core.transmission_and_boundaries(mu, imp, 4.0)
    assert np.allclose(t_py, t_c, rtol=1e-13, atol=0.0)
    assert np.allclose(b_py, b_c, rtol=1e-13, atol=0.0)


@needs_ext
@pytest.mark.parametrize("nearest", [False, True])
def test_sample_polar_parity(nearest):
    rng = np.random.default_rng(1)
    img = rng.standard_normal((32, 64))
    u = rng.uniform(-1.0, 33.0, size=500)
    z = rng.uniform(-1.0, 65.0, size=500)
    a = _fallback.sample_polar(img, u, z, nearest=nearest)
    b = _core.sample_polar(img, u, z, nearest=nearest)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-15)


@needs_ext
def test_depth_blur_parity():
    rng = np.random.default_rng(2)
    img = rng.standard_normal((40, 64))
    sigmas = np.linspace(0.0, 2.0, 64)
    a = _fallback.depth_lateral_blur(img, sigmas)
    b = _core.depth_lateral_blur(img, sigmas)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-14)


def test_blur_preserves_constant():
    img = np.full((24, 32), 3.0)
    out = _fallback.depth_lateral_blur(img, np.full(32, 1.5))
    assert np.allclose(out, 3.0)


def test_backend_reported():
    assert BACKEND in ("compiled", "python")
