"""Run configuration: TOML schema, validation, defaults, and builders.

Config files are TOML with one table per pipeline stage; keys carry their
unit in the name (dx_mm, total_time_us, ...). Every value has a default
(aluminum, 100 x 50 mm section, 2 MHz tone burst, dx = 0.15 mm), an empty
file is a valid config, and unknown keys are rejected. Cross-field
constraints (view window inside the specimen, aperture on the surface,
defect clearance, CFL fraction) are re-validated at load time.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dataset import LabelRule, NoiseModel
from .errors import ConfigParseError, ConfigurationError
from .imaging import FrameSpec
from .materials import (
    DefectSpec,
    MaterialField,
    MaterialSpec,
    Rect,
    SpecimenGeometry,
    rasterize_specimen,
)
from .solver import AbsorbingLayerSpec, SolverParams, max_stable_dt
from .sources import PulseWaveform, TransducerSpec

MM = 1e-3
US = 1e-6
MHZ = 1e6


@dataclass(frozen=True)
class MaterialConfig:
    density: float = 2700.0  # kg/m^3
    longitudinal_speed: float = 6320.0  # m/s
    shear_speed: float = 3130.0  # m/s


@dataclass(frozen=True)
class GeometryConfig:
    width: float = 0.100
    depth: float = 0.050
    view_x0: float | None = None  # default: centered under the transducer
    view_z0: float = 0.0
    view_width: float = 0.020
    view_height: float | None = None  # default: full depth


@dataclass(frozen=True)
class GridConfig:
    dx: float = 0.15 * MM


@dataclass(frozen=True)
class SolverConfig:
    courant: float = 0.9
    total_time: float | None = None  # default: 2.5 * depth / c_L
    sponge_cells: int = 0
    sponge_strength: float = 2.0
    sponge_sides: tuple[str, ...] = ()


@dataclass(frozen=True)
class SourceConfig:
    waveform: str = "tone_burst"
    center_frequency: float = 2.0 * MHZ
    n_cycles: int = 3
    amplitude: float = 1.0
    center_x: float | None = None  # default: specimen center
    aperture: float = 0.006


@dataclass(frozen=True)
class ImagingConfig:
    quantity: str = "velocity_magnitude"
    normalization: str = "per_sequence"
    gamma: float = 0.5
    pixels_per_cell: int = 1


@dataclass(frozen=True)
class DatasetConfig:
    n_locations: int = 55
    n_frames: int = 431
    defect_diameter: float = 0.002
    margin: float = 0.002
    emit_baseline: bool = True
    noise_sigma: float = 0.0
    noise_speckle: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class DefectConfig:
    center_x: float
    center_z: float
    diameter: float = 0.002


# (section, key) -> (dataclass field, unit scale); kept flat so unknown keys
# can be reported with their full dotted name
_SCHEMA = {
    "material": {
        "density_kg_m3": ("density", 1.0),
        "longitudinal_speed_m_s": ("longitudinal_speed", 1.0),
        "shear_speed_m_s": ("shear_speed", 1.0),
    },
    "geometry": {
        "width_mm": ("width", MM),
        "depth_mm": ("depth", MM),
        "view_x0_mm": ("view_x0", MM),
        "view_z0_mm": ("view_z0", MM),
        "view_width_mm": ("view_width", MM),
        "view_height_mm": ("view_height", MM),
    },
    "grid": {"dx_mm": ("dx", MM)},
    "solver": {
        "courant": ("courant", 1.0),
        "total_time_us": ("total_time", US),
        "sponge_cells": ("sponge_cells", None),
        "sponge_strength": ("sponge_strength", 1.0),
        "sponge_sides": ("sponge_sides", None),
    },
    "source": {
        "waveform": ("waveform", None),
        "center_frequency_mhz": ("center_frequency", MHZ),
        "n_cycles": ("n_cycles", None),
        "amplitude": ("amplitude", 1.0),
        "center_x_mm": ("center_x", MM),
        "aperture_mm": ("aperture", MM),
    },
    "imaging": {
        "quantity": ("quantity", None),
        "normalization": ("normalization", None),
        "gamma": ("gamma", 1.0),
        "pixels_per_cell": ("pixels_per_cell", None),
    },
    "dataset": {
        "n_locations": ("n_locations", None),
        "n_frames": ("n_frames", None),
        "defect_diameter_mm": ("defect_diameter", MM),
        "margin_mm": ("margin", MM),
        "emit_baseline": ("emit_baseline", None),
        "noise_sigma": ("noise_sigma", 1.0),
        "noise_speckle": ("noise_speckle", 1.0),
        "seed": ("seed", None),
    },
    "defect": {
        "center_x_mm": ("center_x", MM),
        "center_z_mm": ("center_z", MM),
        "diameter_mm": ("diameter", MM),
    },
}

_SECTION_TYPES = {
    "material": MaterialConfig,
    "geometry": GeometryConfig,
    "grid": GridConfig,
    "solver": SolverConfig,
    "source": SourceConfig,
    "imaging": ImagingConfig,
    "dataset": DatasetConfig,
    "defect": DefectConfig,
}


@dataclass(frozen=True)
class RunConfig:
    material: MaterialConfig = dc_field(default_factory=MaterialConfig)
    geometry_cfg: GeometryConfig = dc_field(default_factory=GeometryConfig)
    grid: GridConfig = dc_field(default_factory=GridConfig)
    solver: SolverConfig = dc_field(default_factory=SolverConfig)
    source: SourceConfig = dc_field(default_factory=SourceConfig)
    imaging: ImagingConfig = dc_field(default_factory=ImagingConfig)
    dataset: DatasetConfig = dc_field(default_factory=DatasetConfig)
    defect: DefectConfig | None = None

    # resolved values -------------------------------------------------

    def transducer_center(self) -> float:
        if self.source.center_x is not None:
            return self.source.center_x
        return self.geometry_cfg.width / 2.0

    def material_spec(self) -> MaterialSpec:
        m = self.material
        return MaterialSpec(m.density, m.longitudinal_speed, m.shear_speed)

    def geometry(self) -> SpecimenGeometry:
        g = self.geometry_cfg
        height = g.view_height if g.view_height is not None else g.depth - g.view_z0
        if g.view_x0 is not None:
            x0 = g.view_x0
        else:
            x0 = self.transducer_center() - g.view_width / 2.0
        return SpecimenGeometry(
            width=g.width,
            depth=g.depth,
            view_region=Rect(x0, g.view_z0, g.view_width, height),
        )

    def build_field(self) -> MaterialField:
        return rasterize_specimen(self.geometry(), self.material_spec(), self.grid.dx)

    def pulse(self) -> PulseWaveform:
        s = self.source
        return PulseWaveform(s.waveform, s.center_frequency, s.n_cycles, s.amplitude)

    def transducer(self) -> TransducerSpec:
        return TransducerSpec(center_x=self.transducer_center(), aperture=self.source.aperture)

    def frame_spec(self) -> FrameSpec:
        i = self.imaging
        return FrameSpec(i.quantity, i.normalization, i.gamma, i.pixels_per_cell)

    def sponge(self) -> AbsorbingLayerSpec:
        s = self.solver
        return AbsorbingLayerSpec(
            thickness_cells=s.sponge_cells,
            damping_strength=s.sponge_strength,
            sides=frozenset(s.sponge_sides),
        )

    def noise_model(self) -> NoiseModel:
        return NoiseModel(self.dataset.noise_sigma, self.dataset.noise_speckle)

    def defect_spec(self) -> DefectSpec | None:
        if self.defect is None:
            return None
        return DefectSpec(
            center=(self.defect.center_x, self.defect.center_z),
            diameter=self.defect.diameter,
        )

    def total_time(self) -> float:
        if self.solver.total_time is not None:
            return self.solver.total_time
        return 2.5 * self.geometry_cfg.depth / self.material.longitudinal_speed

    def solver_params(
        self, field: MaterialField, n_frames: int | None = None
    ) -> tuple[SolverParams, int]:
        """Params sized so floor(n_steps / frame_every) == n_frames exactly."""
        if n_frames is None:
            n_frames = self.dataset.n_frames
        dt = max_stable_dt(field, self.solver.courant)
        raw_steps = self.total_time() / dt
        frame_every = max(1, round(raw_steps / n_frames))
        params = SolverParams(
            dt=dt,
            n_steps=frame_every * n_frames,
            courant_fraction=self.solver.courant,
            sponge=self.sponge(),
        )
        return params, frame_every

    def label_rule(self, frame_interval: float) -> LabelRule:
        return LabelRule(
            reference_point=(self.transducer_center(), 0.0),
            wave_speed=self.material.longitudinal_speed,
            frame_interval=frame_interval,
        )

    # serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        """Fully resolved config (defaults filled in) keyed like the TOML schema."""
        geometry = self.geometry()
        resolved = {
            ("geometry", "view_x0"): geometry.view_region.x0,
            ("geometry", "view_height"): geometry.view_region.height,
            ("source", "center_x"): self.transducer_center(),
            ("solver", "total_time"): self.total_time(),
        }
        out: dict = {}
        for section, keys in _SCHEMA.items():
            obj = getattr(self, "geometry_cfg" if section == "geometry" else section)
            if obj is None:
                continue
            sec: dict = {}
            for key, (attr, scale) in keys.items():
                value = resolved.get((section, attr), getattr(obj, attr))
                if value is None:
                    continue
                if scale not in (None, 1.0):
                    value = value / scale
                if isinstance(value, tuple):
                    value = list(value)
                sec[key] = value
            out[section] = sec
        return out

    def snapshot_text(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.snapshot_text().encode("utf-8")).hexdigest()


def _coerce(section: str, key: str, value, target_default):
    name = f"{section}.{key}"
    if isinstance(target_default, bool) or key == "emit_baseline":
        if not isinstance(value, bool):
            raise ConfigurationError(f"{name} must be a boolean")
        return value
    if key == "sponge_sides":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigurationError(f"{name} must be a list of strings")
        return tuple(value)
    if isinstance(value, bool):
        raise ConfigurationError(f"{name} must be a number, not a boolean")
    if isinstance(target_default, int) and not isinstance(target_default, bool):
        if not isinstance(value, int):
            raise ConfigurationError(f"{name} must be an integer")
        return value
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(target_default, str) or target_default is None:
        if isinstance(value, str):
            return value
    raise ConfigurationError(f"{name} has unsupported type {type(value).__name__}")


def _parse_section(section: str, data: dict):
    cls = _SECTION_TYPES[section]
    schema = _SCHEMA[section]
    kwargs = {}
    defaults = {
        "material": MaterialConfig(),
        "geometry": GeometryConfig(),
        "grid": GridConfig(),
        "solver": SolverConfig(),
        "source": SourceConfig(),
        "imaging": ImagingConfig(),
        "dataset": DatasetConfig(),
        "defect": None,
    }[section]
    for key, value in data.items():
        if key not in schema:
            raise ConfigurationError(f"unknown config key '{section}.{key}'")
        attr, scale = schema[key]
        default = getattr(defaults, attr, None) if defaults is not None else None
        coerced = _coerce(section, key, value, default)
        if scale not in (None, 1.0) and isinstance(coerced, float):
            coerced = coerced * scale
        kwargs[attr] = coerced
    if section == "defect":
        missing = {"center_x", "center_z"} - set(kwargs)
        if missing:
            raise ConfigurationError(
                f"defect section requires keys {sorted('defect.' + m for m in missing)}"
            )
    return cls(**kwargs)


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a TOML config string."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError(f"config parse error: {exc}") from exc
    sections = {}
    for section, content in data.items():
        if section not in _SCHEMA:
            raise ConfigurationError(f"unknown config section '{section}'")
        if not isinstance(content, dict):
            raise ConfigurationError(f"config section '{section}' must be a table")
        sections[section] = _parse_section(section, content)
    config = RunConfig(
        material=sections.get("material", MaterialConfig()),
        geometry_cfg=sections.get("geometry", GeometryConfig()),
        grid=sections.get("grid", GridConfig()),
        solver=sections.get("solver", SolverConfig()),
        source=sections.get("source", SourceConfig()),
        imaging=sections.get("imaging", ImagingConfig()),
        dataset=sections.get("dataset", DatasetConfig()),
        defect=sections.get("defect"),
    )
    validate_config(config)
    return config


def load_config(path) -> RunConfig:
    """Load a config file; a missing [section] or an empty file means defaults."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def default_config() -> RunConfig:
    return parse_config("")


def validate_config(config: RunConfig) -> None:
    """Re-check every cross-field constraint; raises ConfigurationError."""
    material = config.material_spec()  # validates elasticity constraints
    geometry = config.geometry()  # validates view-in-specimen
    dx = config.grid.dx
    if dx <= 0 or dx >= min(geometry.width, geometry.depth):
        from .errors import InvalidResolutionError

        raise InvalidResolutionError(
            f"grid.dx_mm={dx / MM} is too coarse for a "
            f"{geometry.width / MM} x {geometry.depth / MM} mm specimen"
        )
    if not 0.0 < config.solver.courant <= 1.0:
        raise ConfigurationError("solver.courant must be in (0, 1]")
    if config.total_time() <= 0:
        raise ConfigurationError("solver.total_time_us must be positive")
    config.pulse()
    config.sponge()
    config.frame_spec()
    config.noise_model()
    transducer = config.transducer()
    half = transducer.aperture / 2.0
    if transducer.center_x - half < 0 or transducer.center_x + half > geometry.width:
        raise ConfigurationError("source aperture extends outside the top surface")
    d = config.dataset
    if d.n_frames < 1:
        raise ConfigurationError("dataset.n_frames must be >= 1")
    if d.n_locations < 0:
        raise ConfigurationError("dataset.n_locations must be >= 0")
    if d.margin < 0:
        raise ConfigurationError("dataset.margin_mm must be >= 0")
    if d.defect_diameter <= 0:
        raise ConfigurationError("dataset.defect_diameter_mm must be positive")
    if d.n_locations > 0:
        inner = geometry.view_region.shrunk(d.margin + d.defect_diameter / 2.0)
        if inner.width <= 0 or inner.height <= 0:
            raise ConfigurationError(
                "dataset margins leave no room for defects inside the view region"
            )
    defect = config.defect_spec()
    if defect is not None:
        clearance = defect.radius + d.margin
        cx, cz = defect.center
        if (
            cx - clearance <= 0
            or cz - clearance <= 0
            or cx + clearance >= geometry.width
            or cz + clearance >= geometry.depth
        ):
            raise ConfigurationError("defect does not fit inside the specimen with margin")
    # CFL sanity: the derived dt must satisfy the stability bound
    c_max = material.longitudinal_speed
    dt = config.solver.courant * dx / (c_max * math.sqrt(2.0))
    if dt > dx / (c_max * math.sqrt(2.0)) * (1.0 + 1e-12):
        raise ConfigurationError("derived time step violates the CFL bound")
