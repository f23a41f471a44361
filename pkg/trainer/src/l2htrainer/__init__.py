"""Low-to-high quality ultrasound image translator (masked conditional GAN)."""

from .config import TranslatorConfig, full_scale_config

__version__ = "0.1.0"

__all__ = ["TranslatorConfig", "full_scale_config", "__version__"]
