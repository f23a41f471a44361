"""Procedural 2D tissue phantoms on the beam (polar) grid.

A phantom is a label field over (scanline, axial sample) plus a table of
per-label acoustic properties.  Inclusions are parametric shapes rasterized
in list order; later shapes overwrite earlier ones.
"""

from dataclasses import dataclass, field

import numpy as np
import yaml

from .geometry import BeamGeometry, default_geometry

DB_TO_NEPER_INTENSITY = np.log(10.0) / 10.0


class PhantomConfigError(ValueError):
    """Raised when a phantom spec references unknown labels or bad shapes."""


@dataclass(frozen=True)
class TissueProperties:
    """Acoustic properties of one tissue label.

    ``attenuation_mu`` is the intensity attenuation per axial sample
    (dimensionless), pre-scaled from dB/cm/MHz so the attenuation sum needs
    no unit conversion at simulation time.
    """

    impedance: float            # MRayl
    attenuation_mu: float       # per axial sample
    scatterer_mean: float
    scatterer_std: float
    scatterer_density: float    # fraction of cells carrying a scatterer

    def __post_init__(self):
        if self.impedance <= 0:
            raise ValueError("impedance must be positive")
        if self.attenuation_mu < 0:
            raise ValueError("attenuation_mu must be non-negative")
        if self.scatterer_std < 0:
            raise ValueError("scatterer_std must be non-negative")
        if not 0.0 <= self.scatterer_density <= 1.0:
            raise ValueError("scatterer_density must lie in [0, 1]")


@dataclass(frozen=True)
class Ellipse:
    """Ellipse in fractional beam coordinates.

    ``center`` and radii are fractions of the grid: lateral in [0, 1] across
    scanlines, depth in [0, 1] down the axial axis.
    """

    center_lateral: float
    center_depth: float
    radius_lateral: float
    radius_depth: float


@dataclass(frozen=True)
class Band:
    """Depth band over a scanline range, in fractional beam coordinates."""

    depth_min: float
    depth_max: float
    lateral_min: float = 0.0
    lateral_max: float = 1.0


@dataclass(frozen=True)
class Inclusion:
    shape: object  # Ellipse | Band
    label: int


@dataclass(frozen=True)
class PhantomSpec:
    background_label: int = 0
    inclusions: tuple = ()
    rng_seed: int = 0


@dataclass(frozen=True)
class TissueMap:
    """Label grid plus property table; the simulation's ground truth."""

    labels: np.ndarray                      # (scanlines, axial), int
    properties: dict                        # label -> TissueProperties
    geometry: BeamGeometry
    background_label: int = 0

    def __post_init__(self):
        expected = (self.geometry.scanline_count, self.geometry.axial_samples)
        if self.labels.shape != expected:
            raise ValueError(
                f"label grid {self.labels.shape} does not match geometry {expected}"
            )
        present = np.unique(self.labels)
        missing = [int(l) for l in present if int(l) not in self.properties]
        if missing:
            raise PhantomConfigError(f"labels without properties: {missing}")
        self.labels.setflags(write=False)

    def property_grid(self, attr):
        """Per-cell lookup of one property, vectorized over the label grid."""
        max_label = max(self.properties)
        table = np.zeros(max_label + 1)
        for label, props in self.properties.items():
            table[label] = getattr(props, attr)
        return table[self.labels]


# Shipped labels
SOFT_TISSUE = 0
FLUID = 1
BONE = 2
FAT = 3
MUSCLE = 4

# dB/cm/MHz attenuation and MRayl impedance, literature-typical values.
# Scatterer statistics are aesthetic defaults tuned so bone casts a visible
# shadow within 15 cm at 8 MHz and fluid renders anechoic.
_BASE_PROPERTIES = {
    SOFT_TISSUE: dict(impedance=1.63, atten_db_cm_mhz=0.54,
                      scatterer_mean=1.0, scatterer_std=0.30, scatterer_density=0.80),
    FLUID: dict(impedance=1.48, atten_db_cm_mhz=0.002,
                scatterer_mean=0.0, scatterer_std=0.0, scatterer_density=0.0),
    BONE: dict(impedance=7.80, atten_db_cm_mhz=12.0,
               scatterer_mean=1.5, scatterer_std=0.40, scatterer_density=0.90),
    FAT: dict(impedance=1.38, atten_db_cm_mhz=0.63,
              scatterer_mean=0.7, scatterer_std=0.25, scatterer_density=0.70),
    MUSCLE: dict(impedance=1.70, atten_db_cm_mhz=1.00,
                 scatterer_mean=1.2, scatterer_std=0.35, scatterer_density=0.85),
}


def attenuation_per_sample(atten_db_cm_mhz, geometry):
    """Convert dB/cm/MHz to the per-sample intensity attenuation constant."""
    db_per_sample = atten_db_cm_mhz * geometry.frequency_mhz * geometry.axial_step_cm
    return db_per_sample * DB_TO_NEPER_INTENSITY


def default_property_table(geometry=None):
    """Shipped property table with mu pre-scaled for the given geometry."""
    geometry = geometry or default_geometry()
    table = {}
    for label, p in _BASE_PROPERTIES.items():
        table[label] = TissueProperties(
            impedance=p["impedance"],
            attenuation_mu=attenuation_per_sample(p["atten_db_cm_mhz"], geometry),
            scatterer_mean=p["scatterer_mean"],
            scatterer_std=p["scatterer_std"],
            scatterer_density=p["scatterer_density"],
        )
    return table


def _rasterize(shape, geometry):
    """Boolean mask of cells whose centers fall inside the shape."""
    s = np.arange(geometry.scanline_count)[:, None]
    z = np.arange(geometry.axial_samples)[None, :]
    # fractional coordinates of cell centers
    u = (s + 0.5) / geometry.scanline_count
    v = (z + 0.5) / geometry.axial_samples
    if isinstance(shape, Ellipse):
        du = (u - shape.center_lateral) / shape.radius_lateral
        dv = (v - shape.center_depth) / shape.radius_depth
        return du * du + dv * dv <= 1.0
    if isinstance(shape, Band):
        return ((v >= shape.depth_min) & (v <= shape.depth_max)
                & (u >= shape.lateral_min) & (u <= shape.lateral_max))
    raise PhantomConfigError(f"unknown shape type: {type(shape).__name__}")


def generate_phantom(spec, geometry, properties=None):
    """Rasterize a phantom spec into a TissueMap.

    Deterministic for fixed (spec, geometry).  Inclusions are painted in
    list order so later entries overwrite earlier ones.
    """
    properties = properties if properties is not None else default_property_table(geometry)
    for inc in spec.inclusions:
        if inc.label not in properties:
            raise PhantomConfigError(
                f"inclusion references unknown label {inc.label}"
            )
    if spec.background_label not in properties:
        raise PhantomConfigError(
            f"background references unknown label {spec.background_label}"
        )
    labels = np.full(
        (geometry.scanline_count, geometry.axial_samples),
        spec.background_label,
        dtype=np.int32,
    )
    for inc in spec.inclusions:
        labels[_rasterize(inc.shape, geometry)] = inc.label
    return TissueMap(labels=labels, properties=properties, geometry=geometry,
                     background_label=spec.background_label)


def bone_inclusion_spec(seed=0):
    """Shipped phantom with a bone inclusion that casts an acoustic shadow."""
    return PhantomSpec(
        background_label=SOFT_TISSUE,
        inclusions=(
            Inclusion(Ellipse(0.30, 0.40, 0.16, 0.10), FAT),
            Inclusion(Ellipse(0.72, 0.30, 0.12, 0.08), FLUID),
            Inclusion(Ellipse(0.50, 0.35, 0.08, 0.06), BONE),
        ),
        rng_seed=seed,
    )


def random_phantom_spec(rng, n_inclusions=(1, 4)):
    """Draw a random phantom layout; labels drawn from the shipped table."""
    count = int(rng.integers(n_inclusions[0], n_inclusions[1] + 1))
    choices = [FLUID, BONE, FAT, MUSCLE]
    inclusions = []
    for _ in range(count):
        label = int(rng.choice(choices))
        shape = Ellipse(
            center_lateral=float(rng.uniform(0.15, 0.85)),
            center_depth=float(rng.uniform(0.15, 0.75)),
            radius_lateral=float(rng.uniform(0.05, 0.20)),
            radius_depth=float(rng.uniform(0.04, 0.15)),
        )
        inclusions.append(Inclusion(shape, label))
    return PhantomSpec(
        background_label=SOFT_TISSUE,
        inclusions=tuple(inclusions),
        rng_seed=int(rng.integers(0, 2**31 - 1)),
    )


# -- spec file loading --------------------------------------------------------
#
# Phantom specs are loadable from YAML:
#
#   background_label: 0
#   rng_seed: 7
#   inclusions:
#     - {shape: ellipse, label: 2, center_lateral: 0.5, center_depth: 0.35,
#        radius_lateral: 0.08, radius_depth: 0.06}
#     - {shape: band, label: 3, depth_min: 0.1, depth_max: 0.2}

_ELLIPSE_KEYS = {"center_lateral", "center_depth", "radius_lateral", "radius_depth"}
_BAND_KEYS = {"depth_min", "depth_max", "lateral_min", "lateral_max"}


def _shape_from_dict(entry):
    kind = entry.get("shape")
    params = {k: v for k, v in entry.items() if k not in ("shape", "label")}
    if kind == "ellipse":
        unknown = set(params) - _ELLIPSE_KEYS
        if unknown:
            raise PhantomConfigError(f"unknown ellipse keys: {sorted(unknown)}")
        return Ellipse(**params)
    if kind == "band":
        unknown = set(params) - _BAND_KEYS
        if unknown:
            raise PhantomConfigError(f"unknown band keys: {sorted(unknown)}")
        return Band(**params)
    raise PhantomConfigError(f"unknown shape kind: {kind!r}")


def spec_from_dict(data):
    known = {"background_label", "rng_seed", "inclusions"}
    unknown = set(data) - known
    if unknown:
        raise PhantomConfigError(f"unknown phantom spec keys: {sorted(unknown)}")
    inclusions = tuple(
        Inclusion(shape=_shape_from_dict(e), label=int(e["label"]))
        for e in data.get("inclusions", [])
    )
    return PhantomSpec(
        background_label=int(data.get("background_label", 0)),
        inclusions=inclusions,
        rng_seed=int(data.get("rng_seed", 0)),
    )


def spec_to_dict(spec):
    entries = []
    for inc in spec.inclusions:
        if isinstance(inc.shape, Ellipse):
            entry = {"shape": "ellipse",
                     "center_lateral": inc.shape.center_lateral,
                     "center_depth": inc.shape.center_depth,
                     "radius_lateral": inc.shape.radius_lateral,
                     "radius_depth": inc.shape.radius_depth}
        else:
            entry = {"shape": "band",
                     "depth_min": inc.shape.depth_min,
                     "depth_max": inc.shape.depth_max,
                     "lateral_min": inc.shape.lateral_min,
                     "lateral_max": inc.shape.lateral_max}
        entry["label"] = inc.label
        entries.append(entry)
    return {"background_label": spec.background_label,
            "rng_seed": spec.rng_seed,
            "inclusions": entries}


def load_spec(path):
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise PhantomConfigError(f"phantom spec file {path} is not a mapping")
    return spec_from_dict(data)


def save_spec(spec, path):
    with open(path, "w") as fh:
        yaml.safe_dump(spec_to_dict(spec), fh, sort_keys=False)
