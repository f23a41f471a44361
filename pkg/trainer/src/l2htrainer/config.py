"""Translator configuration: ablation variant and training hyperparameters."""

import dataclasses
from dataclasses import dataclass

import yaml

# input channel layouts per ablation variant
VARIANT_CHANNELS = {
    "M": ("x", "m"),
    "MS": ("x", "m", "s"),
    "MSA": ("x", "m", "s", "a"),
}


class ConfigError(ValueError):
    pass


@dataclass
class TranslatorConfig:
    variant: str = "MSA"
    generator_depth: int = 6        # desk scale; full scale uses 8 levels
    discriminator_layers: int = 4
    base_channels: int = 16
    lambda_fidelity: float = 100.0
    lr: float = 0.0002
    beta1: float = 0.5
    beta2: float = 0.999
    batch_size: int = 4
    max_iterations: int = 2000
    patch_size: int = 64
    checkpoint_every: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANT_CHANNELS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.lambda_fidelity < 0:
            raise ConfigError("lambda_fidelity must be non-negative")
        if self.patch_size % (2 ** self.generator_depth) != 0:
            raise ConfigError(
                f"patch size {self.patch_size} not divisible by "
                f"2^{self.generator_depth}")

    @property
    def in_channels(self):
        return len(VARIANT_CHANNELS[self.variant])

    @property
    def channel_names(self):
        return VARIANT_CHANNELS[self.variant]

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            data = yaml.safe_load(fh)
        return cls.from_dict(data or {})

    def as_dict(self):
        return dataclasses.asdict(self)


def full_scale_config(variant="MSA"):
    """The published training recipe: 512 patches, batch 16, 50k iterations."""
    return TranslatorConfig(variant=variant, generator_depth=8, base_channels=64,
                            batch_size=16, max_iterations=50_000, patch_size=512)
