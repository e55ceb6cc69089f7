"""Transducer source model, pulse waveforms, receivers, and arrival picking.

Two pulse shapes are provided:

* Ricker wavelet  (1 - 2 pi^2 f^2 tau^2) exp(-pi^2 f^2 tau^2), tau = t - t0
  with t0 = 1.5 / f, truncated to [0, 2 t0].
* Hann tone burst  sin(2 pi f t) * 0.5 (1 - cos(2 pi f t / n)) on [0, n / f],
  rescaled so its peak equals the requested amplitude.

The transducer is a vertical surface traction distributed over an aperture
on the top surface; receivers sample a field quantity anywhere in the
specimen by bilinear interpolation on the matching staggered grid.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import ConfigurationError, NoArrivalError
from .materials import MaterialField

if TYPE_CHECKING:
    from .solver import WavefieldState


@dataclass(frozen=True)
class PulseWaveform:
    kind: str = "tone_burst"  # "ricker" | "tone_burst"
    center_frequency: float = 2.0e6  # Hz
    n_cycles: int = 3  # tone burst only
    amplitude: float = 1.0  # peak traction, N/m per unit thickness

    def __post_init__(self):
        if self.kind not in ("ricker", "tone_burst"):
            raise ConfigurationError(f"unknown waveform kind {self.kind!r}")
        if self.center_frequency <= 0.0:
            raise ConfigurationError("center_frequency must be positive")
        if self.kind == "tone_burst" and self.n_cycles < 1:
            raise ConfigurationError("tone burst needs n_cycles >= 1")

    @property
    def support(self) -> float:
        """Length of the interval [0, support] outside which the pulse is 0."""
        if self.kind == "ricker":
            return 3.0 / self.center_frequency  # 2 * t0, t0 = 1.5 / f
        return self.n_cycles / self.center_frequency


@functools.lru_cache(maxsize=32)
def _tone_burst_peak(n_cycles: int) -> float:
    # peak of sin(u) * 0.5 (1 - cos(u / n)) over u in [0, 2 pi n],
    # located by dense sampling plus one parabolic refinement
    u = np.linspace(0.0, 2.0 * math.pi * n_cycles, 16385)
    g = np.abs(np.sin(u) * 0.5 * (1.0 - np.cos(u / n_cycles)))
    k = int(np.argmax(g))
    if 0 < k < len(u) - 1:
        y0, y1, y2 = g[k - 1], g[k], g[k + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom != 0.0:
            du = u[1] - u[0]
            u_pk = u[k] + 0.5 * du * (y0 - y2) / denom
            return float(
                abs(math.sin(u_pk) * 0.5 * (1.0 - math.cos(u_pk / n_cycles)))
            )
    return float(g[k])


def sample_waveform(pulse: PulseWaveform, t):
    """Evaluate the pulse at time(s) `t` (scalar or array), zero outside support."""
    t = np.asarray(t, dtype=float)
    f = pulse.center_frequency
    if pulse.kind == "ricker":
        t0 = 1.5 / f
        tau = t - t0
        arg = (math.pi * f * tau) ** 2
        val = pulse.amplitude * (1.0 - 2.0 * arg) * np.exp(-arg)
    else:
        u = 2.0 * math.pi * f * t
        window = 0.5 * (1.0 - np.cos(u / pulse.n_cycles))
        val = pulse.amplitude / _tone_burst_peak(pulse.n_cycles) * np.sin(u) * window
    inside = (t >= 0.0) & (t <= pulse.support)
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TransducerSpec:
    center_x: float = 0.050  # m, on the top surface
    aperture: float = 0.006  # m
    surface: str = "top"
    polarization: str = "vertical"

    def __post_init__(self):
        if self.surface != "top" or self.polarization != "vertical":
            raise ConfigurationError(
                "only vertical transducers on the top surface are supported"
            )
        if self.aperture <= 0.0:
            raise ConfigurationError("aperture must be positive")

    def face_indices(self, field: MaterialField) -> np.ndarray:
        """Indices i of top-surface vz faces (x = (i + 1/2) dx) under the aperture."""
        x_lo = self.center_x - self.aperture / 2.0
        x_hi = self.center_x + self.aperture / 2.0
        if x_lo < 0.0 or x_hi > field.width:
            raise ConfigurationError(
                f"aperture [{x_lo}, {x_hi}] m extends outside the top surface"
            )
        xs = (np.arange(field.nx) + 0.5) * field.dx
        idx = np.nonzero((xs >= x_lo) & (xs <= x_hi))[0]
        if idx.size == 0:
            idx = np.array([min(field.nx - 1, max(0, round(self.center_x / field.dx - 0.5)))])
        return idx


@dataclass(frozen=True)
class ReceiverSpec:
    position: tuple[float, float]  # (x, z) m
    quantity: str = "vz"  # "vx" | "vz" | "pressure"

    def __post_init__(self):
        if self.quantity not in ("vx", "vz", "pressure"):
            raise ConfigurationError(f"unknown receiver quantity {self.quantity!r}")


def _bilinear(arr: np.ndarray, gx: float, gz: float) -> float:
    # sample arr at fractional grid coordinates (gz, gx), clamped to the grid
    nzp, nxp = arr.shape
    gx = min(max(gx, 0.0), nxp - 1.0)
    gz = min(max(gz, 0.0), nzp - 1.0)
    i0 = min(int(gx), nxp - 2) if nxp > 1 else 0
    j0 = min(int(gz), nzp - 2) if nzp > 1 else 0
    fx = gx - i0
    fz = gz - j0
    i1 = min(i0 + 1, nxp - 1)
    j1 = min(j0 + 1, nzp - 1)
    return float(
        arr[j0, i0] * (1 - fx) * (1 - fz)
        + arr[j0, i1] * fx * (1 - fz)
        + arr[j1, i0] * (1 - fx) * fz
        + arr[j1, i1] * fx * fz
    )


def record_receiver(state: "WavefieldState", field: MaterialField, probe: ReceiverSpec) -> float:
    """Sample the probe quantity at its position by bilinear interpolation.

    Staggered node coordinates: vx at (i dx, (j+1/2) dx), vz at
    ((i+1/2) dx, j dx), stresses at cell centers ((i+1/2) dx, (j+1/2) dx).
    """
    x, z = probe.position
    dx = field.dx
    if probe.quantity == "vx":
        return _bilinear(state.vx, x / dx, z / dx - 0.5)
    if probe.quantity == "vz":
        return _bilinear(state.vz, x / dx - 0.5, z / dx)
    pressure = -0.5 * (state.sxx + state.szz)
    return _bilinear(pressure, x / dx - 0.5, z / dx - 0.5)


@dataclass
class Trace:
    """Time series sampled at a receiver: values[k] is at time t0 + k dt."""

    values: np.ndarray
    dt: float
    t0: float = 0.0

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.values)) * self.dt


def first_arrival_time(trace: Trace, threshold_fraction: float) -> float:
    """Earliest sample time where |trace| exceeds threshold_fraction * max|trace|.

    Raises NoArrivalError for an identically zero trace.
    """
    if not 0.0 < threshold_fraction < 1.0:
        raise ValueError("threshold_fraction must be in (0, 1)")
    mag = np.abs(np.asarray(trace.values, dtype=float))
    if mag.size == 0 or not mag.any():
        raise NoArrivalError("trace is identically zero")
    thr = threshold_fraction * mag.max()
    k = int(np.argmax(mag > thr)) if (mag > thr).any() else int(np.argmax(mag >= thr))
    return trace.t0 + k * trace.dt
