"""Batch generation of labeled image sequences and the dataset manifest.

Each sampled defect location gets one simulated sequence rendered to PNG
frames; frames are labeled defect-free until the straight-line longitudinal
arrival at the defect center, defective afterwards. A shared defect-free
baseline sequence (location id 0) is emitted by default. The manifest is
line-delimited JSON: one header object, then one record per image, sorted
by (location_id, frame_index).
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .errors import ConfigurationError, LuvtsimError, PlacementError
from .imaging import ImageFrame, encode_image, extract_snapshot, normalize_sequence
from .materials import DefectSpec, Rect, insert_cavity
from .solver import TransducerSource, iter_simulation

if TYPE_CHECKING:
    from .config import RunConfig

SCHEMA_VERSION = 1
LABEL_FREE = "defect_free"
LABEL_DEFECTIVE = "defective"

#: location id reserved for the shared defect-free baseline sequence
BASELINE_LOCATION_ID = 0


@dataclass(frozen=True)
class LabelRule:
    """Frame labeling by straight-line wave arrival at the defect center."""

    reference_point: tuple[float, float]  # transducer center, m
    wave_speed: float  # m/s, longitudinal
    frame_interval: float  # s

    def __post_init__(self):
        if self.wave_speed <= 0:
            raise ConfigurationError("wave_speed must be positive")
        if self.frame_interval <= 0:
            raise ConfigurationError("frame_interval must be positive")

    def first_defective_frame(self, defect: DefectSpec) -> int:
        arrival = math.dist(self.reference_point, defect.center) / self.wave_speed
        return math.ceil(arrival / self.frame_interval)


def label_frames(n_frames: int, defect: DefectSpec | None, rule: LabelRule) -> list[str]:
    """Labels for frames 0..n_frames-1; all defect-free without a defect."""
    if n_frames < 1:
        raise ConfigurationError("n_frames must be >= 1")
    if defect is None:
        return [LABEL_FREE] * n_frames
    first = rule.first_defective_frame(defect)
    return [LABEL_FREE if k < first else LABEL_DEFECTIVE for k in range(n_frames)]


@dataclass
class SampleRecord:
    image_path: str
    location_id: int
    frame_index: int
    time: float
    label: str
    defect: DefectSpec | None

    def to_json_dict(self) -> dict:
        defect = None
        if self.defect is not None:
            defect = {
                "center_x": self.defect.center[0],
                "center_z": self.defect.center[1],
                "diameter": self.defect.diameter,
            }
        return {
            "image_path": self.image_path,
            "location_id": self.location_id,
            "frame_index": self.frame_index,
            "time": self.time,
            "label": self.label,
            "defect": defect,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SampleRecord":
        defect = None
        if d.get("defect") is not None:
            defect = DefectSpec(
                center=(d["defect"]["center_x"], d["defect"]["center_z"]),
                diameter=d["defect"]["diameter"],
            )
        return cls(
            image_path=d["image_path"],
            location_id=d["location_id"],
            frame_index=d["frame_index"],
            time=d["time"],
            label=d["label"],
            defect=defect,
        )


@dataclass
class DatasetManifest:
    schema_version: int
    config_digest: str
    seed: int
    records: list[SampleRecord]

    def __post_init__(self):
        keys = [(r.location_id, r.frame_index) for r in self.records]
        if keys != sorted(keys):
            raise ConfigurationError("manifest records must be sorted by (location_id, frame_index)")
        paths = [r.image_path for r in self.records]
        if len(set(paths)) != len(paths):
            raise ConfigurationError("manifest image paths must be unique")

    def write_jsonl(self, path) -> None:
        header = {
            "schema_version": self.schema_version,
            "config_digest": self.config_digest,
            "seed": self.seed,
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for rec in self.records:
                fh.write(json.dumps(rec.to_json_dict(), sort_keys=True) + "\n")

    @classmethod
    def read_jsonl(cls, path) -> "DatasetManifest":
        with open(path, encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            records = [SampleRecord.from_json_dict(json.loads(line)) for line in fh if line.strip()]
        return cls(
            schema_version=header["schema_version"],
            config_digest=header["config_digest"],
            seed=header["seed"],
            records=records,
        )


def sample_defect_locations(
    n: int,
    region: Rect,
    margin: float,
    seed: int,
    diameter: float = 0.002,
) -> list[DefectSpec]:
    """Sample n defect centers uniformly in `region` shrunk by margin + radius."""
    if n < 0:
        raise ConfigurationError("n must be >= 0")
    inner = region.shrunk(margin + diameter / 2.0)
    if inner.width <= 0 or inner.height <= 0:
        raise PlacementError(
            f"region {region} minus margin {margin} m cannot hold a {diameter} m defect"
        )
    rng = np.random.default_rng(seed)
    xs = rng.uniform(inner.x0, inner.x1, size=n)
    zs = rng.uniform(inner.z0, inner.z1, size=n)
    return [DefectSpec(center=(float(x), float(z)), diameter=diameter) for x, z in zip(xs, zs)]


@dataclass(frozen=True)
class NoiseModel:
    gaussian_sigma: float = 0.0  # additive, intensity levels
    speckle_strength: float = 0.0  # multiplicative, dimensionless

    def __post_init__(self):
        if self.gaussian_sigma < 0 or self.speckle_strength < 0:
            raise ConfigurationError("noise parameters must be >= 0")

    @property
    def enabled(self) -> bool:
        return self.gaussian_sigma > 0 or self.speckle_strength > 0


def add_measurement_noise(frame: ImageFrame, model: NoiseModel, seed) -> ImageFrame:
    """Seeded speckle + Gaussian intensity noise; identity for zero parameters."""
    if not model.enabled:
        return ImageFrame(
            frame.width_px,
            frame.height_px,
            frame.intensities.copy(),
            frame.time,
            frame.frame_index,
        )
    rng = np.random.default_rng(seed)
    base = frame.intensities.astype(float)
    speckle = rng.standard_normal(base.shape)
    gauss = rng.standard_normal(base.shape)
    noisy = base * (1.0 + model.speckle_strength * speckle) + model.gaussian_sigma * gauss
    out = np.clip(np.rint(noisy), 0, 255).astype(np.uint8)
    return ImageFrame(frame.width_px, frame.height_px, out, frame.time, frame.frame_index)


class GenerationError(LuvtsimError):
    """A location failed to generate; the original error is chained."""

    def __init__(self, location_id: int, cause: BaseException):
        self.location_id = location_id
        super().__init__(f"dataset generation failed for location {location_id}: {cause}")


def _image_name(location_id: int, frame_index: int) -> str:
    return f"loc{location_id:04d}_frame{frame_index:04d}.png"


def _render_location(
    config: "RunConfig",
    out_dir: str,
    location_id: int,
    defect: DefectSpec | None,
    seed: int,
) -> list[SampleRecord]:
    """Simulate one sequence, write its PNGs, and return its manifest rows."""
    field = config.build_field()
    if defect is not None:
        field = insert_cavity(field, defect, margin=config.dataset.margin)
    params, frame_every = config.solver_params(field)
    source = TransducerSource(config.transducer(), config.pulse())
    frame_spec = config.frame_spec()
    view = config.geometry().view_region
    noise = config.noise_model()

    raw_frames: list[np.ndarray] = []
    times: list[float] = []
    for live in iter_simulation(field, params, source, frame_every=frame_every):
        raw_frames.append(extract_snapshot(live, field, view, frame_spec).astype(np.float32))
        times.append(live.time)

    frames = normalize_sequence(raw_frames, frame_spec, times=times)
    rule = config.label_rule(params.dt * frame_every)
    labels = label_frames(len(frames), defect, rule)

    image_dir = Path(out_dir) / "images"
    records = []
    for frame, label in zip(frames, labels):
        if noise.enabled:
            frame = add_measurement_noise(frame, noise, seed=[seed, location_id, frame.frame_index])
        name = _image_name(location_id, frame.frame_index)
        encode_image(frame, image_dir / name)
        records.append(
            SampleRecord(
                image_path=f"images/{name}",
                location_id=location_id,
                frame_index=frame.frame_index,
                time=frame.time,
                label=label,
                defect=defect,
            )
        )
    return records


def _worker_count() -> int:
    raw = os.environ.get("LUVT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def generate_dataset(config: "RunConfig", out_dir, seed: int | None = None) -> DatasetManifest:
    """Generate the full labeled image tree plus manifest.jsonl.

    Deterministic for a fixed (config, seed): defect locations, simulation,
    rendering, and noise all derive from the one seed. Partial outputs of a
    failed location are removed before the error propagates.
    """
    if seed is None:
        seed = config.dataset.seed
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)

    locations = sample_defect_locations(
        config.dataset.n_locations,
        config.geometry().view_region,
        config.dataset.margin,
        seed,
        diameter=config.dataset.defect_diameter,
    )
    jobs: list[tuple[int, DefectSpec | None]] = [
        (i + 1, defect) for i, defect in enumerate(locations)
    ]
    # an empty dataset stays empty: no baseline without defect sequences
    if config.dataset.emit_baseline and jobs:
        jobs.insert(0, (BASELINE_LOCATION_ID, None))

    records: list[SampleRecord] = []
    workers = min(_worker_count(), max(1, len(jobs)))
    if workers == 1:
        for location_id, defect in jobs:
            records.extend(_run_job(config, str(out), location_id, defect, seed))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_job, config, str(out), location_id, defect, seed)
                for location_id, defect in jobs
            ]
            for fut in futures:
                records.extend(fut.result())

    records.sort(key=lambda r: (r.location_id, r.frame_index))
    manifest = DatasetManifest(
        schema_version=SCHEMA_VERSION,
        config_digest=config.digest(),
        seed=seed,
        records=records,
    )
    manifest.write_jsonl(out / "manifest.jsonl")
    (out / "config.snapshot").write_text(config.snapshot_text(), encoding="utf-8")
    return manifest


def _run_job(
    config: "RunConfig", out_dir: str, location_id: int, defect: DefectSpec | None, seed: int
) -> list[SampleRecord]:
    try:
        return _render_location(config, out_dir, location_id, defect, seed)
    except Exception as exc:
        _cleanup_location(out_dir, location_id)
        raise GenerationError(location_id, exc) from exc


def _cleanup_location(out_dir: str, location_id: int) -> None:
    image_dir = Path(out_dir) / "images"
    if image_dir.is_dir():
        for p in image_dir.glob(f"loc{location_id:04d}_frame*.png"):
            try:
                p.unlink()
            except OSError:
                pass


def verify_labels(manifest: DatasetManifest, rule: LabelRule) -> bool:
    """Recompute every record's label from its defect and index; True if all match."""
    per_location: dict[int, list[SampleRecord]] = {}
    for rec in manifest.records:
        per_location.setdefault(rec.location_id, []).append(rec)
    for recs in per_location.values():
        labels = label_frames(len(recs), recs[0].defect, rule)
        for rec, expected in zip(recs, labels):
            if rec.label != expected:
                return False
    return True
