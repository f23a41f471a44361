"""Masked adversarial and fidelity losses.

Generator output and target are element-wise multiplied with the binary
beam mask before both the L1 fidelity term and the discriminator input, so
out-of-sector pixels can never influence training.  The generator GAN term
uses the non-saturating form (maximize log D(fake)); the discriminator is
trained with real = 1, fake = 0, averaged over the patch-logit grid.
"""

import torch
import torch.nn.functional as F


def masked_l1(g_out, target, mask):
    """Mean absolute error over all pixels of the masked tensors."""
    return torch.mean(torch.abs(mask * (target - g_out)))


def generator_gan_loss(d_fake_logits):
    # non-saturating: -E[log D(G)]
    return F.binary_cross_entropy_with_logits(
        d_fake_logits, torch.ones_like(d_fake_logits))


def discriminator_gan_loss(d_real_logits, d_fake_logits):
    real = F.binary_cross_entropy_with_logits(
        d_real_logits, torch.ones_like(d_real_logits))
    fake = F.binary_cross_entropy_with_logits(
        d_fake_logits, torch.zeros_like(d_fake_logits))
    return 0.5 * (real + fake)


def compute_losses(g_out, target, mask, conditioning, discriminator,
                   lambda_fidelity):
    """All loss terms for one batch.

    Returns (gan_g, gan_d, fidelity, total_g).  Shapes must align; the
    discriminator sees masked candidates conditioned on the generator's
    inputs.
    """
    if g_out.shape != target.shape or mask.shape[-2:] != g_out.shape[-2:]:
        raise ValueError(
            f"shape mismatch: g_out {tuple(g_out.shape)}, "
            f"target {tuple(target.shape)}, mask {tuple(mask.shape)}")
    masked_fake = mask * g_out
    masked_real = mask * target
    fidelity = masked_l1(g_out, target, mask)
    d_fake = discriminator(masked_fake, conditioning)
    gan_g = generator_gan_loss(d_fake)
    d_real = discriminator(masked_real, conditioning)
    d_fake_detached = discriminator(masked_fake.detach(), conditioning)
    gan_d = discriminator_gan_loss(d_real, d_fake_detached)
    total_g = gan_g + lambda_fidelity * fidelity
    return gan_g, gan_d, fidelity, total_g
