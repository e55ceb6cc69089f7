"""Wavefield snapshots to normalized 8-bit grayscale frames.

The chosen scalar quantity is sampled at cell centers over the view
window, normalized against the per-frame or per-sequence maximum, passed
through a gamma curve (gamma < 1 lifts the weak scattered waves), and
quantized to 8 bits. Encoding is lossless PNG.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from PIL import Image

from .errors import ConfigurationError, ImageWriteError
from .materials import MaterialField, Rect
from .solver import WavefieldState

_QUANTITIES = ("velocity_magnitude", "vz", "pressure")
_NORMALIZATIONS = ("per_sequence", "per_frame")


@dataclass(frozen=True)
class FrameSpec:
    quantity: str = "velocity_magnitude"
    normalization: str = "per_sequence"
    gamma: float = 0.5
    pixels_per_cell: int = 1

    def __post_init__(self):
        if self.quantity not in _QUANTITIES:
            raise ConfigurationError(f"unknown quantity {self.quantity!r}")
        if self.normalization not in _NORMALIZATIONS:
            raise ConfigurationError(f"unknown normalization {self.normalization!r}")
        if self.gamma <= 0:
            raise ConfigurationError("gamma must be positive")
        if self.pixels_per_cell < 1:
            raise ConfigurationError("pixels_per_cell must be >= 1")


@dataclass
class ImageFrame:
    width_px: int
    height_px: int
    intensities: np.ndarray  # uint8, (height_px, width_px)
    time: float
    frame_index: int


def _cell_window(field: MaterialField, view: Rect) -> tuple[int, int, int, int]:
    dx = field.dx
    i0 = round(view.x0 / dx)
    i1 = round(view.x1 / dx)
    j0 = round(view.z0 / dx)
    j1 = round(view.z1 / dx)
    if i0 < 0 or j0 < 0 or i1 > field.nx or j1 > field.nz or i1 <= i0 or j1 <= j0:
        raise ConfigurationError(
            f"view {view} lies outside the {field.width} x {field.depth} m grid"
        )
    return i0, i1, j0, j1


def extract_snapshot(
    state: WavefieldState, field: MaterialField, view: Rect, spec: FrameSpec
) -> np.ndarray:
    """Raw scalar image of the chosen quantity over `view`, one value per cell.

    Velocities are averaged from the surrounding faces to cell centers;
    void cells render as 0.
    """
    i0, i1, j0, j1 = _cell_window(field, view)
    if spec.quantity == "velocity_magnitude":
        vxc = 0.5 * (state.vx[:, :-1] + state.vx[:, 1:])
        vzc = 0.5 * (state.vz[:-1, :] + state.vz[1:, :])
        raw = np.hypot(vxc, vzc)
    elif spec.quantity == "vz":
        raw = 0.5 * (state.vz[:-1, :] + state.vz[1:, :])
    else:
        raw = -0.5 * (state.sxx + state.szz)
    raw = np.where(field.void, 0.0, raw)
    return raw[j0:j1, i0:i1].copy()


def normalize_sequence(
    raw_frames: Sequence[np.ndarray],
    spec: FrameSpec,
    times: Sequence[float] | None = None,
    start_index: int = 0,
) -> list[ImageFrame]:
    """Quantize raw frames to 8 bits: round(255 * (|v| / scope_max)^gamma).

    per_sequence shares one maximum across all frames; per_frame normalizes
    each frame on its own. An all-zero scope yields black frames.
    """
    if len(raw_frames) == 0:
        raise ConfigurationError("normalize_sequence needs at least one frame")
    mags = [np.abs(np.asarray(f, dtype=float)) for f in raw_frames]
    seq_max = max(float(m.max()) for m in mags) if mags else 0.0
    frames = []
    for k, mag in enumerate(mags):
        scope = seq_max if spec.normalization == "per_sequence" else float(mag.max())
        if scope > 0.0:
            scaled = np.clip(np.rint(255.0 * (mag / scope) ** spec.gamma), 0, 255)
        else:
            scaled = np.zeros_like(mag)
        intens = scaled.astype(np.uint8)
        if spec.pixels_per_cell > 1:
            intens = np.repeat(
                np.repeat(intens, spec.pixels_per_cell, axis=0),
                spec.pixels_per_cell,
                axis=1,
            )
        frames.append(
            ImageFrame(
                width_px=intens.shape[1],
                height_px=intens.shape[0],
                intensities=intens,
                time=float(times[k]) if times is not None else 0.0,
                frame_index=start_index + k,
            )
        )
    return frames


def encode_image(frame: ImageFrame, path) -> None:
    """Write the frame as an 8-bit grayscale PNG (lossless round trip)."""
    try:
        Image.fromarray(frame.intensities, mode="L").save(str(path), format="PNG")
    except OSError as exc:
        raise ImageWriteError(f"cannot write image {path}: {exc}") from exc


def decode_image(path) -> np.ndarray:
    """Read an 8-bit grayscale image back as a uint8 array."""
    with Image.open(str(path)) as img:
        return np.asarray(img.convert("L"), dtype=np.uint8)
