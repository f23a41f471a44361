"""Command-line front end: generate, evaluate, render, mask, attenmap.

Exit codes: 0 success, 1 usage/config error, 2 data error.  Every command
is deterministic given (config, seed); generation parallelism (--jobs)
never changes outputs because each sample owns a pre-assigned seed.
"""

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml
from PIL import Image, ImageDraw

from . import dataset, metrics, phantom, rawio
from .attenmap import attenuation_integral, normalize_98
from .geometry import BeamGeometry, default_geometry
from .scanconvert import DEFAULT_OUT_SIZE, beam_mask

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2

ENV_OUT_ROOT = "SONOSIM_OUT_ROOT"


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Generation parameters; round-trips through YAML/JSON."""

    geometry: dict = field(default_factory=dict)
    out_height: int = DEFAULT_OUT_SIZE[0]
    out_width: int = DEFAULT_OUT_SIZE[1]
    samples: int = 200
    seed: int = 0
    train_frac: float = 0.9
    phantom_spec: str | dict | None = None   # None -> random per-sample phantoms

    _GEOMETRY_KEYS = {"scanline_count", "axial_samples", "fov_deg", "depth_cm",
                      "apex_frac", "frequency_mhz"}

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        bad = set(cfg.geometry) - cls._GEOMETRY_KEYS
        if bad:
            raise ConfigError(f"unknown geometry keys: {sorted(bad)}")
        return cfg

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            data = yaml.safe_load(fh)
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} is not a mapping")
        return cls.from_dict(data)

    def as_dict(self):
        return dataclasses.asdict(self)

    def build_geometry(self):
        try:
            return BeamGeometry(**self.geometry) if self.geometry else default_geometry()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def resolve_phantom(self, rng):
        """Phantom spec for one sample: fixed from config, or random."""
        if self.phantom_spec is None:
            return phantom.random_phantom_spec(rng)
        if isinstance(self.phantom_spec, dict):
            return phantom.spec_from_dict(self.phantom_spec)
        return phantom.load_spec(self.phantom_spec)


def _build_and_write(args):
    root, cfg_dict, sample_seed, index = args
    cfg = RunConfig.from_dict(cfg_dict)
    geometry = cfg.build_geometry()
    spec_rng = np.random.default_rng(sample_seed)
    spec = cfg.resolve_phantom(spec_rng)
    sample = dataset.build_sample(
        spec, geometry, seed=sample_seed,
        sample_id=f"sample_{index:05d}",
        out_size=(cfg.out_height, cfg.out_width),
    )
    return dataset.write_sample(root, sample)


def cmd_generate(args):
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.samples is not None:
        cfg.samples = args.samples
    if args.seed is not None:
        cfg.seed = args.seed
    root = args.out or os.environ.get(ENV_OUT_ROOT)
    if not root:
        raise ConfigError("no output directory (--out or SONOSIM_OUT_ROOT)")
    os.makedirs(root, exist_ok=True)

    seed_seq = np.random.SeedSequence(cfg.seed)
    sample_seeds = [int(s.generate_state(1)[0]) for s in seed_seq.spawn(cfg.samples)]
    jobs = [(root, cfg.as_dict(), sample_seeds[i], i) for i in range(cfg.samples)]

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            records = list(pool.map(_build_and_write, jobs))
    else:
        records = [_build_and_write(j) for j in jobs]

    manifest = dataset.DatasetManifest(
        root=root, records=records,
        config_hash=dataset.config_hash(cfg.as_dict()),
    )
    train_count = int(round(cfg.train_frac * cfg.samples))
    train_count = min(train_count, cfg.samples - 1)
    if train_count >= 0 and cfg.samples > 1:
        dataset.split(manifest, train_count, seed=cfg.seed)
    elif manifest.records:
        manifest.records[0].split = "eval"
    path = dataset.write_manifest(manifest)
    print(f"wrote {len(records)} samples and {path}")
    return EXIT_OK


def cmd_evaluate(args):
    manifest = dataset.read_manifest(args.manifest)
    dataset.validate_manifest(manifest)
    report = metrics.evaluate(manifest, args.predictions,
                              psnr_mode=args.psnr_mode, split=args.split)
    table_path = args.table or os.path.splitext(args.report)[0] + ".txt"
    metrics.write_report(report, args.report, table_path)
    print(metrics.report_table(report))
    print(f"wrote {args.report} and {table_path}")
    return EXIT_OK


# fixed label -> display-gray lookup for segmentation panels
_LABEL_GRAYS = {0: 40, 1: 90, 2: 255, 3: 140, 4: 190}


def render_panel(sample):
    """Side-by-side x | s | a | y panel with min/max annotations on the a panel.

    Returns (PIL image, annotations dict).
    """
    def to8(img, lo, hi):
        scaled = (np.clip(img, lo, hi) - lo) / (hi - lo or 1.0) * 255.0
        return scaled.astype(np.uint8)

    seg = np.zeros_like(sample.s, dtype=np.uint8)
    for label, gray in _LABEL_GRAYS.items():
        seg[sample.s == label] = gray
    seg[sample.m < 0.5] = 0

    a_min = float(sample.a.min())
    a_max = float(sample.a.max())
    panels = [to8(sample.x, 0, 255), seg, to8(sample.a, 0.0, 1.0),
              to8(sample.y, 0, 255)]
    strip = np.concatenate(panels, axis=1)
    img = Image.fromarray(strip).convert("L")
    draw = ImageDraw.Draw(img)
    width = sample.a.shape[1]
    annotations = {"a_min": a_min, "a_max": a_max}
    draw.text((2 * width + 4, 4), f"min={a_min:.4f} max={a_max:.4f}", fill=255)
    return img, annotations


def cmd_render(args):
    manifest = dataset.read_manifest(args.manifest)
    record = manifest.record_for(args.sample_id)
    sample = dataset.read_sample(manifest.root, record)
    img, annotations = render_panel(sample)
    img.save(args.out)
    print(f"wrote {args.out} "
          f"(a: min={annotations['a_min']:.4f} max={annotations['a_max']:.4f})")
    return EXIT_OK


def cmd_mask(args):
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    mask = beam_mask(cfg.build_geometry(), (cfg.out_height, cfg.out_width))
    rawio.write_raw(args.out, mask.pixels.astype(np.float32))
    if args.png:
        Image.fromarray(mask.pixels * 255).save(args.png)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_attenmap(args):
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    geometry = cfg.build_geometry()
    spec = cfg.resolve_phantom(np.random.default_rng(cfg.seed))
    tissue_map = phantom.generate_phantom(spec, geometry)
    att = normalize_98(attenuation_integral(tissue_map))
    rawio.write_raw(args.out, np.asarray(att.values, dtype=np.float32))
    print(f"wrote {args.out} (reference {att.reference:.6g})")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sonosim",
        description="Ultrasound LQ/HQ pair simulator and evaluation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="build a dataset and manifest")
    gen.add_argument("--out", help=f"output root (or ${ENV_OUT_ROOT})")
    gen.add_argument("--config", help="YAML/JSON run config; flags override it")
    gen.add_argument("--samples", type=int)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--jobs", type=int, default=1)
    gen.set_defaults(func=cmd_generate)

    ev = sub.add_parser("evaluate", help="score predictions against HQ targets")
    ev.add_argument("--manifest", required=True, help="dataset root directory")
    ev.add_argument("--predictions", required=True)
    ev.add_argument("--report", required=True, help="JSON report path")
    ev.add_argument("--table", help="text table path (default: report .txt)")
    ev.add_argument("--split", default="eval")
    ev.add_argument("--psnr-mode", choices=["paper", "standard"], default="paper")
    ev.set_defaults(func=cmd_evaluate)

    ren = sub.add_parser("render", help="render an x|s|a|y inspection panel")
    ren.add_argument("--manifest", required=True)
    ren.add_argument("--sample-id", required=True)
    ren.add_argument("--out", required=True)
    ren.set_defaults(func=cmd_render)

    msk = sub.add_parser("mask", help="write the beam mask")
    msk.add_argument("--out", required=True)
    msk.add_argument("--config")
    msk.add_argument("--png")
    msk.set_defaults(func=cmd_mask)

    att = sub.add_parser("attenmap", help="write a normalized attenuation map")
    att.add_argument("--out", required=True)
    att.add_argument("--config")
    att.set_defaults(func=cmd_attenmap)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, phantom.PhantomConfigError, yaml.YAMLError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (dataset.ManifestError, rawio.RawIOError,
            metrics.MetricInputError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
