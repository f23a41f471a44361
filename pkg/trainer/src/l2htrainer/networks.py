"""U-Net generator and patchGAN discriminator.

The generator is an encoder-decoder with skip connections at every level,
fully convolutional, instance normalization before each nonlinearity, and
a tanh output in [-1, 1].  The discriminator is a 4-layer convolutional
patchGAN emitting a grid of per-patch logits, conditioned by channel
concatenation.
"""

import torch
from torch import nn

from .config import TranslatorConfig

MAX_CHANNEL_MULT = 8


def _enc_block(c_in, c_out, normalize=True):
    layers = [nn.Conv2d(c_in, c_out, 4, stride=2, padding=1)]
    if normalize:
        layers.append(nn.InstanceNorm2d(c_out))
    layers.append(nn.LeakyReLU(0.2, inplace=True))
    return nn.Sequential(*layers)


def _dec_block(c_in, c_out, normalize=True):
    layers = [nn.ConvTranspose2d(c_in, c_out, 4, stride=2, padding=1)]
    if normalize:
        layers.append(nn.InstanceNorm2d(c_out))
    layers.append(nn.ReLU(inplace=True))
    return nn.Sequential(*layers)


class UNetGenerator(nn.Module):
    def __init__(self, config: TranslatorConfig):
        super().__init__()
        self.config = config
        depth = config.generator_depth
        base = config.base_channels
        widths = [min(base * 2 ** i, base * MAX_CHANNEL_MULT) for i in range(depth)]

        self.encoders = nn.ModuleList()
        c_prev = config.in_channels
        for i, width in enumerate(widths):
            # no norm on the first block (raw input) or at the bottleneck,
            # where the spatial extent may collapse to 1x1
            self.encoders.append(
                _enc_block(c_prev, width, normalize=(0 < i < depth - 1)))
            c_prev = width

        self.decoders = nn.ModuleList()
        for i in range(depth):
            level = depth - 1 - i          # encoder level this decoder leaves
            c_in = c_prev if i == 0 else c_prev + widths[level]
            c_out = widths[level - 1] if level > 0 else base
            self.decoders.append(_dec_block(c_in, c_out))
            c_prev = c_out

        self.head = nn.Sequential(nn.Conv2d(base, 1, 3, padding=1), nn.Tanh())

    def forward(self, x):
        skips = []
        out = x
        for enc in self.encoders:
            out = enc(out)
            skips.append(out)
        for i, dec in enumerate(self.decoders):
            if i > 0:
                out = torch.cat([out, skips[-1 - i]], dim=1)
            out = dec(out)
        return self.head(out)


class PatchDiscriminator(nn.Module):
    """4-layer conditioned patchGAN; logit grid wider than 1x1 for 128 inputs."""

    def __init__(self, config: TranslatorConfig):
        super().__init__()
        base = max(config.base_channels, 32)
        c_in = config.in_channels + 1  # conditioning channels + candidate image
        layers = [nn.Conv2d(c_in, base, 4, stride=2, padding=1),
                  nn.LeakyReLU(0.2, inplace=True)]
        widths = [base * 2, base * 4, base * 8]
        strides = [2, 2, 1]
        c_prev = base
        for width, stride in zip(widths, strides):
            layers += [nn.Conv2d(c_prev, width, 4, stride=stride, padding=1),
                       nn.InstanceNorm2d(width),
                       nn.LeakyReLU(0.2, inplace=True)]
            c_prev = width
        layers.append(nn.Conv2d(c_prev, 1, 4, stride=1, padding=1))
        self.net = nn.Sequential(*layers)

    def forward(self, candidate, conditioning):
        return self.net(torch.cat([candidate, conditioning], dim=1))


def build_generator(config):
    return UNetGenerator(config)


def build_discriminator(config):
    return PatchDiscriminator(config)
