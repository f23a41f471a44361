"""Kernel backend selection.

The hot inner loops (per-ray transmission marching, polar resampling,
depth-varying lateral blur) exist twice: a compiled Cython extension
(``_core``) and a pure-numpy fallback (``_fallback``).  The compiled core is
preferred when importable; set ``SONOSIM_PURE=1`` to force the fallback.
Both expose the same functions and produce matching results (see
tests/test_kernels.py and benchmarks/bench_kernels.py).
"""

import os

if os.environ.get("SONOSIM_PURE"):
    from . import _fallback as impl
    BACKEND = "python"
else:
    try:
        from . import _core as impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        from . import _fallback as impl
        BACKEND = "python"

transmission_and_boundaries = impl.transmission_and_boundaries
sample_polar = impl.sample_polar
depth_lateral_blur = impl.depth_lateral_blur
