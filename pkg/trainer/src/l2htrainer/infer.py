"""Full-frame inference with a trained translator.

The generator is fully convolutional but needs spatial sizes divisible by
2^depth; inputs are reflect-padded up to the next multiple, run through the
network, and cropped back.  Outputs are masked by the beam mask and mapped
back to the [0, 255] display range.
"""

import os

import numpy as np
import torch
import torch.nn.functional as F

from .config import ConfigError
from .rawdata import Dataset, write_raw
from .train import load_checkpoint, normalize_channels, stack_conditioning


def pad_to_multiple(tensor, multiple):
    """Reflect-pad the trailing two dims up to a multiple; returns (tensor, (h, w))."""
    h, w = tensor.shape[-2:]
    pad_h = (-h) % multiple
    pad_w = (-w) % multiple
    if pad_h or pad_w:
        tensor = F.pad(tensor, (0, pad_w, 0, pad_h), mode="reflect")
    return tensor, (h, w)


def translate(generator, config, sample):
    """Run one normalized sample dict through the generator; returns [0, 255] image."""
    cond = torch.from_numpy(
        stack_conditioning(sample, config.channel_names)).float()[None]
    multiple = 2 ** config.generator_depth
    cond, (h, w) = pad_to_multiple(cond, multiple)
    generator.eval()
    with torch.no_grad():
        out = generator(cond)[0, 0, :h, :w].numpy()
    image = np.clip((out + 1.0) * 127.5, 0.0, 255.0)
    return image * sample["m"]


def run_inference(checkpoint_path, dataset_root, out_dir, split="eval"):
    """Translate every sample in a split; writes <out_dir>/<sample_id>.raw."""
    generator, _, config, _ = load_checkpoint(checkpoint_path)
    dataset = Dataset(dataset_root, split=split)
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for index, sample_id in enumerate(dataset.sample_ids()):
        sample = normalize_channels(dataset.load(index))
        image = translate(generator, config, sample)
        path = os.path.join(out_dir, f"{sample_id}.raw")
        write_raw(path, image)
        written.append(path)
    return written


def check_variant_compatibility(config, available_channels):
    missing = set(config.channel_names) - set(available_channels)
    if missing:
        raise ConfigError(
            f"variant {config.variant} needs channels {sorted(missing)} "
            "that the input does not provide")
