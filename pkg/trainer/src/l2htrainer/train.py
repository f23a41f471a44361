"""Training loop: alternating discriminator/generator updates with Adam."""

import os
from dataclasses import dataclass, field

import numpy as np
import torch

from .config import TranslatorConfig
from .losses import compute_losses
from .networks import build_discriminator, build_generator
from .rawdata import Dataset

SEG_LABEL_MAX = 4.0  # label ids normalized to [0, 1] by the maximum id


class TrainingDiverged(RuntimeError):
    pass


def normalize_channels(sample):
    """Map raw channels to network ranges: B-mode to [-1, 1], labels to [0, 1]."""
    return {
        "x": sample["x"] / 127.5 - 1.0,
        "y": sample["y"] / 127.5 - 1.0,
        "s": np.clip(sample["s"] / SEG_LABEL_MAX, 0.0, 1.0),
        "a": sample["a"],
        "m": sample["m"],
    }


def stack_conditioning(sample, channel_names):
    return np.stack([sample[ch] for ch in channel_names])


@dataclass
class TrainState:
    iteration: int = 0
    losses: dict = field(default_factory=lambda: {
        "gan_g": [], "gan_d": [], "fidelity": []})


class PatchSampler:
    """Random aligned training patches intersecting the beam mask."""

    def __init__(self, dataset: Dataset, config: TranslatorConfig, rng,
                 min_mask_frac=0.25):
        self.samples = [normalize_channels(dataset.load(i))
                        for i in range(len(dataset))]
        self.config = config
        self.rng = rng
        self.min_mask_frac = min_mask_frac

    def batch(self):
        ps = self.config.patch_size
        conditioning, targets, masks = [], [], []
        while len(targets) < self.config.batch_size:
            sample = self.samples[self.rng.integers(len(self.samples))]
            h, w = sample["m"].shape
            r = int(self.rng.integers(0, h - ps + 1))
            c = int(self.rng.integers(0, w - ps + 1))
            win = np.s_[r:r + ps, c:c + ps]
            if sample["m"][win].mean() < self.min_mask_frac:
                continue
            patch = {ch: arr[win] for ch, arr in sample.items()}
            conditioning.append(stack_conditioning(patch, self.config.channel_names))
            targets.append(patch["y"][None])
            masks.append(patch["m"][None])
        to_t = lambda arrs: torch.from_numpy(np.stack(arrs)).float()
        return to_t(conditioning), to_t(targets), to_t(masks)


def save_checkpoint(path, generator, discriminator, config, state,
                    g_opt=None, d_opt=None):
    payload = {
        "config": config.as_dict(),
        "generator": generator.state_dict(),
        "discriminator": discriminator.state_dict(),
        "iteration": state.iteration,
        "losses": state.losses,
    }
    if g_opt is not None:
        payload["g_opt"] = g_opt.state_dict()
        payload["d_opt"] = d_opt.state_dict()
    tmp = path + ".tmp"
    torch.save(payload, tmp)
    os.replace(tmp, path)


def load_checkpoint(path):
    payload = torch.load(path, map_location="cpu", weights_only=False)
    config = TranslatorConfig.from_dict(payload["config"])
    generator = build_generator(config)
    generator.load_state_dict(payload["generator"])
    discriminator = build_discriminator(config)
    discriminator.load_state_dict(payload["discriminator"])
    state = TrainState(iteration=payload["iteration"], losses=payload["losses"])
    return generator, discriminator, config, state


def train(config: TranslatorConfig, dataset_root, out_dir, split="train",
          log_every=100, quiet=False):
    """Train a translator; returns (generator, TrainState).

    Deterministic given config.seed up to torch backend nondeterminism.
    Aborts with a diagnostic checkpoint on non-finite losses.
    """
    os.makedirs(out_dir, exist_ok=True)
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)

    dataset = Dataset(dataset_root, split=split)
    sampler = PatchSampler(dataset, config, rng)
    generator = build_generator(config)
    discriminator = build_discriminator(config)
    g_opt = torch.optim.Adam(generator.parameters(), lr=config.lr,
                             betas=(config.beta1, config.beta2))
    d_opt = torch.optim.Adam(discriminator.parameters(), lr=config.lr,
                             betas=(config.beta1, config.beta2))
    state = TrainState()

    for iteration in range(config.max_iterations):
        conditioning, target, mask = sampler.batch()
        g_out = generator(conditioning)
        gan_g, gan_d, fidelity, total_g = compute_losses(
            g_out, target, mask, conditioning, discriminator,
            config.lambda_fidelity)

        values = (gan_g.item(), gan_d.item(), fidelity.item())
        if not all(np.isfinite(v) for v in values):
            save_checkpoint(os.path.join(out_dir, "diverged.pt"),
                            generator, discriminator, config, state)
            raise TrainingDiverged(
                f"non-finite loss at iteration {iteration}: "
                f"gan_g={values[0]}, gan_d={values[1]}, l1={values[2]}")

        # generator step first: its graph reads the pre-update discriminator
        g_opt.zero_grad(set_to_none=True)
        total_g.backward()
        g_opt.step()

        # discriminator graph uses detached fakes, unaffected by the G step
        d_opt.zero_grad(set_to_none=True)
        gan_d.backward()
        d_opt.step()

        state.iteration = iteration + 1
        state.losses["gan_g"].append(values[0])
        state.losses["gan_d"].append(values[1])
        state.losses["fidelity"].append(values[2])

        if not quiet and (iteration + 1) % log_every == 0:
            print(f"iter {iteration + 1:6d}  gan_g {values[0]:.4f}  "
                  f"gan_d {values[1]:.4f}  l1 {values[2]:.4f}")
        if (iteration + 1) % config.checkpoint_every == 0:
            save_checkpoint(os.path.join(out_dir, f"ckpt_{iteration + 1:06d}.pt"),
                            generator, discriminator, config, state, g_opt, d_opt)

    save_checkpoint(os.path.join(out_dir, "final.pt"),
                    generator, discriminator, config, state, g_opt, d_opt)
    return generator, state
