"""Desk-scale ultrasound simulation and evaluation toolkit.

Generates paired low/high-quality B-mode images with segmentation and
attenuation-integral conditioning maps, and scores translations with a
four-metric protocol (PSNR, SSIM, patch-KL, Fréchet distance).
"""

from ._kernels import BACKEND as kernel_backend

__version__ = "0.1.0"
__all__ = ["kernel_backend", "__version__"]
