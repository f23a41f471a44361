"""Evaluation protocol: PSNR, SSIM, patch-KL, and Fréchet distance.

Per-pair metrics are masked to the beam region.  Aggregates follow the
reporting convention: mean plus 5th percentile for PSNR/SSIM and 95th
percentile for pKL; the Fréchet distance is a single corpus-level number
computed over pluggable feature vectors.
"""

import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import convolve1d

from . import rawio
from .acoustics import percentile
from .dataset import read_sample

PSNR_INF = float("inf")
KL_EPS = 1e-8
COV_REG = 1e-6


class MetricInputError(ValueError):
    """Mismatched or invalid metric inputs."""


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise MetricInputError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b, mode="paper", mask=None):
    """Peak signal-to-noise ratio in dB.

    ``mode='paper'`` uses 10*log10(255/MSE); ``mode='standard'`` the
    conventional 10*log10(255^2/MSE).  Identical images return inf.
    """
    if mode not in ("paper", "standard"):
        raise MetricInputError(f"unknown psnr mode {mode!r}")
    a, b = _check_pair(a, b)
    diff = (a - b) ** 2
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != a.shape:
            raise MetricInputError("mask shape differs from images")
        mse = diff[mask].mean() if mask.any() else 0.0
    else:
        mse = diff.mean()
    if mse == 0.0:
        return PSNR_INF
    peak = 255.0 if mode == "paper" else 255.0 ** 2
    return 10.0 * np.log10(peak / mse)


# SSIM: 11x11 Gaussian window, sigma 1.5, c1 = (0.01*255)^2, c2 = (0.03*255)^2
_SSIM_C1 = (0.01 * 255.0) ** 2
_SSIM_C2 = (0.03 * 255.0) ** 2


def _ssim_window():
    k = np.arange(11) - 5
    w = np.exp(-0.5 * (k / 1.5) ** 2)
    return w / w.sum()


def _ssim_filter(img, window):
    out = convolve1d(img, window, axis=0, mode="reflect")
    return convolve1d(out, window, axis=1, mode="reflect")


def ssim_map(a, b):
    """Local SSIM map over a separable 11x11 Gaussian window."""
    a, b = _check_pair(a, b)
    if min(a.shape) < 11:
        raise MetricInputError("images must be at least 11x11 for SSIM")
    w = _ssim_window()
    mu_a = _ssim_filter(a, w)
    mu_b = _ssim_filter(b, w)
    var_a = _ssim_filter(a * a, w) - mu_a ** 2
    var_b = _ssim_filter(b * b, w) - mu_b ** 2
    cov = _ssim_filter(a * b, w) - mu_a * mu_b
    num = (2 * mu_a * mu_b + _SSIM_C1) * (2 * cov + _SSIM_C2)
    den = (mu_a ** 2 + mu_b ** 2 + _SSIM_C1) * (var_a + var_b + _SSIM_C2)
    return num / den


def ssim(a, b, mask=None):
    """Mean structural similarity; in-mask pixels only when masked."""
    smap = ssim_map(a, b)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != smap.shape:
            raise MetricInputError("mask shape differs from images")
        return float(smap[mask].mean()) if mask.any() else 1.0
    return float(smap.mean())


def _patch_histogram(patch, bins, mask=None):
    values = patch if mask is None else patch[mask]
    if values.size == 0:
        return None
    hist, _ = np.histogram(values, bins=bins, range=(0.0, 255.0))
    hist = hist.astype(np.float64)
    total = hist.sum()
    if total == 0:
        return None
    hist /= total
    hist += KL_EPS
    return hist / hist.sum()


def pkl(a, b, patch=32, bins=50, mask=None):
    """Mean KL divergence between per-patch intensity histograms.

    Non-overlapping ``patch``-sized tiles (partial edge tiles discarded);
    histograms over [0, 255] with additive smoothing before the log ratio.
    Not symmetric in (a, b).
    """
    a, b = _check_pair(a, b)
    rows, cols = a.shape[0] // patch, a.shape[1] // patch
    if rows < 1 or cols < 1:
        raise MetricInputError(f"images smaller than one {patch}x{patch} patch")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != a.shape:
            raise MetricInputError("mask shape differs from images")
    divergences = []
    for r in range(rows):
        for c in range(cols):
            win = np.s_[r * patch:(r + 1) * patch, c * patch:(c + 1) * patch]
            patch_mask = mask[win] if mask is not None else None
            if patch_mask is not None and not patch_mask.any():
                continue
            h_a = _patch_histogram(a[win], bins, patch_mask)
            h_b = _patch_histogram(b[win], bins, patch_mask)
            if h_a is None or h_b is None:
                continue
            divergences.append(float(np.sum(h_a * np.log(h_a / h_b))))
    if not divergences:
        raise MetricInputError("no patches intersect the mask")
    return float(np.mean(divergences))


@dataclass(frozen=True)
class FeatureMatrix:
    """Rows are samples, columns feature dimensions."""

    rows: np.ndarray
    source: str = "histogram_gradient_v1"

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2:
            raise MetricInputError("feature matrix must be 2D")
        if not np.all(np.isfinite(rows)):
            raise MetricInputError("feature matrix contains non-finite values")
        object.__setattr__(self, "rows", rows)


def _cov_sqrt(sigma):
    vals, vecs = np.linalg.eigh(sigma)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_distance(f1, f2):
    """Fréchet distance between Gaussians fitted to two feature matrices.

    ||m1 - m2||^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2}); the matrix square root
    goes through the symmetric product S1^{1/2} S2 S1^{1/2} with negative
    eigenvalues clamped to zero.
    """
    r1, r2 = f1.rows, f2.rows
    if r1.shape[1] != r2.shape[1]:
        raise MetricInputError(
            f"feature dimensions differ: {r1.shape[1]} vs {r2.shape[1]}")
    dim = r1.shape[1]
    m1 = r1.mean(axis=0)
    m2 = r2.mean(axis=0)
    s1 = np.atleast_2d(np.cov(r1, rowvar=False))
    s2 = np.atleast_2d(np.cov(r2, rowvar=False))
    if r1.shape[0] <= dim:
        s1 = s1 + COV_REG * np.eye(dim)
    if r2.shape[0] <= dim:
        s2 = s2 + COV_REG * np.eye(dim)
    root1 = _cov_sqrt(s1)
    inner = _cov_sqrt(root1 @ s2 @ root1)
    value = float(np.sum((m1 - m2) ** 2) + np.trace(s1 + s2) - 2.0 * np.trace(inner))
    return max(value, 0.0)


def histogram_gradient_features(image, mask=None, bins=64):
    """Default FID feature vector: masked 64-bin intensity histogram plus
    mean gradient magnitude.  Out-of-mask pixels are zeroed first so they
    can never influence the features."""
    image = np.asarray(image, dtype=np.float64)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        image = np.where(mask, image, 0.0)
    values = image[mask] if mask is not None else image.ravel()
    if values.size == 0:
        hist = np.zeros(bins)
    else:
        hist, _ = np.histogram(values, bins=bins, range=(0.0, 255.0))
        hist = hist / max(values.size, 1)
    gy, gx = np.gradient(image)
    grad = np.hypot(gx, gy)
    grad_mean = float(grad[mask].mean()) if mask is not None and mask.any() else float(grad.mean())
    return np.concatenate([hist, [grad_mean / 255.0]])


def center_crop_features(image, mask=None, extractor=histogram_gradient_features):
    """Feature rows from the four quadrants of the center square crop."""
    h, w = image.shape
    side = min(h, w)
    r0 = (h - side) // 2
    c0 = (w - side) // 2
    half = side // 2
    rows = []
    for dr in (0, half):
        for dc in (0, half):
            win = np.s_[r0 + dr:r0 + dr + half, c0 + dc:c0 + dc + half]
            sub_mask = mask[win] if mask is not None else None
            rows.append(extractor(image[win], sub_mask))
    return rows


@dataclass
class MetricsReport:
    per_pair: dict = field(default_factory=dict)   # sample_id -> {psnr, ssim, pkl}
    fid: float = 0.0
    fid_extractor: str = "histogram_gradient_v1"
    aggregates: dict = field(default_factory=dict)
    psnr_mode: str = "paper"

    def as_dict(self):
        return dataclasses.asdict(self)


def aggregate(per_pair):
    """Mean plus 5th percentile (PSNR, SSIM) and 95th percentile (pKL)."""
    out = {}
    for name, q in (("psnr", 5.0), ("ssim", 5.0), ("pkl", 95.0)):
        values = np.array([v[name] for v in per_pair.values()])
        finite = values[np.isfinite(values)]
        mean = float(values.mean()) if len(finite) == len(values) else PSNR_INF
        pct = percentile(values, q) if len(finite) == len(values) else (
            percentile(finite, q) if len(finite) else PSNR_INF)
        out[name] = {"mean": mean, "percentile": pct, "percentile_q": q}
    return out


def load_feature_matrix(path, source="external"):
    return FeatureMatrix(rows=rawio.read_raw(path).astype(np.float64), source=source)


def evaluate(manifest, predictions_dir, psnr_mode="paper", split="eval",
             feature_extractor=None, feature_source="histogram_gradient_v1"):
    """Score predictions against HQ targets for one manifest split.

    Predictions live in ``predictions_dir`` as ``<sample_id>.raw``.  All
    per-pair metrics are masked to the beam region; FID features come from
    center crops via the pluggable extractor.
    """
    records = manifest.split_records(split)
    if not records:
        raise MetricInputError(f"manifest has no {split!r} records")
    extractor = feature_extractor or histogram_gradient_features
    per_pair = {}
    pred_rows = []
    target_rows = []
    for rec in records:
        pred_path = os.path.join(predictions_dir, f"{rec.sample_id}.raw")
        if not os.path.exists(pred_path):
            raise MetricInputError(f"missing prediction for sample {rec.sample_id}")
        sample = read_sample(manifest.root, rec)
        pred = rawio.read_raw(pred_path).astype(np.float64)
        if pred.shape != sample.y.shape:
            raise MetricInputError(
                f"{rec.sample_id}: prediction shape {pred.shape} "
                f"differs from target {sample.y.shape}")
        mask = sample.m > 0.5
        pred = np.where(mask, pred, 0.0)
        target = np.where(mask, sample.y, 0.0)
        per_pair[rec.sample_id] = {
            "psnr": psnr(pred, target, mode=psnr_mode, mask=mask),
            "ssim": ssim(pred, target, mask=mask),
            "pkl": pkl(pred, target, mask=mask),
        }
        pred_rows.extend(center_crop_features(pred, mask, extractor))
        target_rows.extend(center_crop_features(target, mask, extractor))
    fid = frechet_distance(FeatureMatrix(np.array(pred_rows), feature_source),
                           FeatureMatrix(np.array(target_rows), feature_source))
    return MetricsReport(per_pair=per_pair, fid=fid, fid_extractor=feature_source,
                         aggregates=aggregate(per_pair), psnr_mode=psnr_mode)


def report_table(report):
    """Plain-text table mirroring the published results layout."""
    agg = report.aggregates
    lines = [
        f"{'':14s}{'PSNR':>18s}{'SSIM':>18s}{'pKL':>18s}{'FID':>10s}",
        f"{'':14s}{'mean':>9s}{'%ile':>9s}{'mean':>9s}{'%ile':>9s}"
        f"{'mean':>9s}{'%ile':>9s}{'':>10s}",
    ]

    def fmt(v):
        return f"{'inf':>9s}" if not np.isfinite(v) else f"{v:9.4f}"

    lines.append(
        "predictions   "
        + fmt(agg["psnr"]["mean"]) + fmt(agg["psnr"]["percentile"])
        + fmt(agg["ssim"]["mean"]) + fmt(agg["ssim"]["percentile"])
        + fmt(agg["pkl"]["mean"]) + fmt(agg["pkl"]["percentile"])
        + f"{report.fid:10.4f}"
    )
    lines.append(f"FID extractor: {report.fid_extractor}; PSNR mode: {report.psnr_mode}")
    return "\n".join(lines)


def write_report(report, json_path, table_path=None):
    with open(json_path, "w") as fh:
        json.dump(report.as_dict(), fh, indent=2)
    if table_path:
        with open(table_path, "w") as fh:
            fh.write(report_table(report) + "\n")
