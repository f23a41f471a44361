import pytest
import torch

from l2htrainer.config import ConfigError, TranslatorConfig, full_scale_config
from l2htrainer.networks import build_discriminator, build_generator


def small_cfg(variant="MSA"):
    return TranslatorConfig(variant=variant, generator_depth=4, base_channels=8,
                            patch_size=32)


def test_generator_output_shape_and_range():
    cfg = small_cfg()
    g = build_generator(cfg)
    out = g(torch.randn(2, cfg.in_channels, 32, 32))
    assert out.shape == (2, 1, 32, 32)
    assert float(out.min()) >= -1.0 and float(out.max()) <= 1.0


def test_generator_fully_convolutional():
    """Same weights handle any size divisible by 2^depth; params unchanged."""
    cfg = TranslatorConfig(variant="MS", generator_depth=6, base_channels=16)
    g = build_generator(cfg)
    n_params = sum(p.numel() for p in g.parameters())
    assert g(torch.randn(1, cfg.in_channels, 128, 128)).shape == (1, 1, 128, 128)
    assert g(torch.randn(1, cfg.in_channels, 256, 384)).shape == (1, 1, 256, 384)
    assert sum(p.numel() for p in g.parameters()) == n_params


def test_variant_channel_counts():
    for variant, channels in (("M", 2), ("MS", 3), ("MSA", 4)):
        cfg = small_cfg(variant)
        assert cfg.in_channels == channels
        g = build_generator(cfg)
        assert g(torch.randn(1, channels, 32, 32)).shape == (1, 1, 32, 32)


def test_wrong_channel_count_rejected():
    cfg = small_cfg("MSA")
    g = build_generator(cfg)
    with pytest.raises(RuntimeError):
        g(torch.randn(1, 2, 32, 32))


def test_discriminator_logit_grid():
    cfg = TranslatorConfig(variant="MSA", generator_depth=6, base_channels=16)
    d = build_discriminator(cfg)
    logits = d(torch.randn(2, 1, 128, 128), torch.randn(2, 4, 128, 128))
    assert logits.shape[0] == 2 and logits.shape[1] == 1
    assert logits.shape[2] >= 8 and logits.shape[3] >= 8


def test_batch_equivariance():
    cfg = small_cfg("M")
    torch.manual_seed(0)
    g = build_generator(cfg).eval()
    x = torch.randn(3, cfg.in_channels, 32, 32)
    with torch.no_grad():
        batched = g(x)
        singles = torch.cat([g(x[i:i + 1]) for i in range(3)])
    assert torch.allclose(batched, singles, atol=1e-5)


def test_full_scale_recipe():
    cfg = full_scale_config("MSA")
    assert cfg.generator_depth == 8
    assert cfg.base_channels == 64
    assert cfg.batch_size == 16
    assert cfg.max_iterations == 50_000
    assert cfg.patch_size == 512


def test_config_validation():
    with pytest.raises(ConfigError):
        TranslatorConfig(variant="XYZ")
    with pytest.raises(ConfigError):
        TranslatorConfig(patch_size=48, generator_depth=6)
    with pytest.raises(ConfigError):
        TranslatorConfig.from_dict({"no_such_key": 1})
