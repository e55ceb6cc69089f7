"""Explicit velocity-stress finite-difference solver for 2D elastodynamics.

Plane-strain leapfrog on a staggered grid (Virieux layout):

    rho dv/dt = div(sigma)          v updated at half-integer steps
    dsigma/dt = lam tr(e') I + 2 mu e'   sigma at integer steps

Staggering for an nx * nz cell grid, arrays indexed [z, x]:

    sxx, szz  (nz,   nx)    cell centers   ((i+1/2) dx, (j+1/2) dx)
    sxz       (nz+1, nx+1)  cell corners   (i dx, j dx)
    vx        (nz,   nx+1)  x-faces        (i dx, (j+1/2) dx)
    vz        (nz+1, nx)    z-faces        ((i+1/2) dx, j dx)

All outer boundaries and cavity walls are traction-free, realized by the
vacuum formalism: stresses outside the material are identically zero,
face densities average the vacuum in (a surface face carries half a cell
of mass), and corner shear moduli are harmonic means that vanish when any
adjacent cell is void. This keeps the discrete divergence and gradient
exact negative adjoints of each other, so the scheme conserves a discrete
energy to roundoff and is exactly reciprocal - properties the validation
suite measures directly.

An optional exponential sponge (multiplicative damping ramp) absorbs
outgoing waves on the left/right/bottom sides; it is off by default so
outer reflections mimic a finite specimen.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterator, Sequence

import numpy as np

from .backend import kernels
from .errors import ConfigurationError, NumericalInstabilityError
from .materials import MaterialField
from .sources import (
    PulseWaveform,
    ReceiverSpec,
    Trace,
    TransducerSpec,
    record_receiver,
    sample_waveform,
)

_SPONGE_SIDES = frozenset({"left", "right", "bottom"})


@dataclass(frozen=True)
class AbsorbingLayerSpec:
    """Exponential sponge layer; disabled when thickness_cells == 0.

    Cells a fraction q into the layer (q = 1 at the outer boundary) are
    scaled by exp(-(damping_strength * q)^2) each step.
    """

    thickness_cells: int = 0
    damping_strength: float = 2.0
    sides: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.thickness_cells < 0:
            raise ConfigurationError("sponge thickness must be >= 0")
        if self.damping_strength < 0:
            raise ConfigurationError("sponge damping_strength must be >= 0")
        sides = frozenset(self.sides)
        if not sides <= _SPONGE_SIDES:
            raise ConfigurationError(f"sponge sides must be a subset of {set(_SPONGE_SIDES)}")
        object.__setattr__(self, "sides", sides)

    @property
    def enabled(self) -> bool:
        return self.thickness_cells > 0 and bool(self.sides) and self.damping_strength > 0


@dataclass(frozen=True)
class SolverParams:
    dt: float
    n_steps: int
    courant_fraction: float = 0.9
    sponge: AbsorbingLayerSpec = dc_field(default_factory=AbsorbingLayerSpec)

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigurationError("dt must be positive")
        if self.n_steps < 0:
            raise ConfigurationError("n_steps must be >= 0")

    @classmethod
    def stable_for(
        cls,
        field: MaterialField,
        n_steps: int,
        courant_fraction: float = 0.9,
        sponge: AbsorbingLayerSpec | None = None,
    ) -> "SolverParams":
        """Params with dt pinned to the stability bound at the given fraction."""
        return cls(
            dt=max_stable_dt(field, courant_fraction),
            n_steps=n_steps,
            courant_fraction=courant_fraction,
            sponge=sponge or AbsorbingLayerSpec(),
        )


def max_stable_dt(field: MaterialField, courant_fraction: float = 1.0) -> float:
    """Largest stable time step: courant_fraction * dx / (c_L,max * sqrt(2))."""
    if courant_fraction <= 0:
        raise ConfigurationError("courant_fraction must be positive")
    return courant_fraction * field.dx / (field.max_longitudinal_speed() * math.sqrt(2.0))


@dataclass
class WavefieldState:
    """One snapshot of the leapfrog state.

    Velocities live half a step behind the stresses: after n steps the
    stresses are at time n dt and the velocities at (n - 1/2) dt; `time`
    records n dt.
    """

    vx: np.ndarray
    vz: np.ndarray
    sxx: np.ndarray
    szz: np.ndarray
    sxz: np.ndarray
    time: float
    step_index: int
    dt: float

    @classmethod
    def zeros(cls, field: MaterialField, dt: float) -> "WavefieldState":
        nz, nx = field.nz, field.nx
        return cls(
            vx=np.zeros((nz, nx + 1)),
            vz=np.zeros((nz + 1, nx)),
            sxx=np.zeros((nz, nx)),
            szz=np.zeros((nz, nx)),
            sxz=np.zeros((nz + 1, nx + 1)),
            time=0.0,
            step_index=0,
            dt=dt,
        )

    def copy(self) -> "WavefieldState":
        return WavefieldState(
            vx=self.vx.copy(),
            vz=self.vz.copy(),
            sxx=self.sxx.copy(),
            szz=self.szz.copy(),
            sxz=self.sxz.copy(),
            time=self.time,
            step_index=self.step_index,
            dt=self.dt,
        )

    def field_arrays(self) -> tuple[np.ndarray, ...]:
        return (self.vx, self.vz, self.sxx, self.szz, self.sxz)


class _Coefficients:
    """Precomputed update coefficients and sponge masks for one (field, dt)."""

    def __init__(self, field: MaterialField, dt: float, sponge: AbsorbingLayerSpec):
        nz, nx, dx = field.nz, field.nx, field.dx
        self.dtx = dt / dx
        rho = np.where(field.void, 0.0, field.density)
        mu = np.where(field.void, 0.0, field.lame_mu)
        lam = np.where(field.void, 0.0, field.lame_lambda)

        # face densities: arithmetic mean with vacuum (zero) outside
        rho_px = np.pad(rho, ((0, 0), (1, 1)))
        self.fx = 0.5 * (rho_px[:, :-1] + rho_px[:, 1:])  # (nz, nx+1)
        rho_pz = np.pad(rho, ((1, 1), (0, 0)))
        self.fz = 0.5 * (rho_pz[:-1, :] + rho_pz[1:, :])  # (nz+1, nx)
        with np.errstate(divide="ignore"):
            self.bx = np.where(self.fx > 0, 1.0 / self.fx, 0.0)
            self.bz = np.where(self.fz > 0, 1.0 / self.fz, 0.0)

        self.lam = lam
        self.lam2mu = lam + 2.0 * mu

        # corner shear modulus: harmonic mean of the 4 surrounding cells,
        # zero whenever any of them is void or outside the grid
        mu_p = np.pad(mu, 1)
        quads = (mu_p[:-1, :-1], mu_p[:-1, 1:], mu_p[1:, :-1], mu_p[1:, 1:])
        positive = np.ones((nz + 1, nx + 1), dtype=bool)
        recip = np.zeros((nz + 1, nx + 1))
        for q in quads:
            positive &= q > 0
            with np.errstate(divide="ignore"):
                recip += np.where(q > 0, 1.0 / np.maximum(q, 1e-300), 0.0)
        self.mu_c = np.where(positive, 4.0 / np.where(recip > 0, recip, 1.0), 0.0)

        # compliance factors for the strain energy (zero in void cells)
        det = 4.0 * mu * (lam + mu)
        with np.errstate(divide="ignore", invalid="ignore"):
            self.comp_a = np.where(det > 0, self.lam2mu / det, 0.0)
            self.comp_b = np.where(det > 0, lam / det, 0.0)
            self.inv_2mu_c = np.where(self.mu_c > 0, 0.5 / np.maximum(self.mu_c, 1e-300), 0.0)

        self.sponge_masks = _sponge_masks(field, sponge) if sponge.enabled else None


def _sponge_profile(coord: np.ndarray, extent: float, spec: AbsorbingLayerSpec, sides: tuple[str, str], dx: float) -> np.ndarray:
    w = np.ones_like(coord)
    thickness = spec.thickness_cells * dx
    lo_side, hi_side = sides
    if lo_side in spec.sides:
        q = np.clip((thickness - coord) / thickness, 0.0, 1.0)
        w *= np.exp(-((spec.damping_strength * q) ** 2))
    if hi_side in spec.sides:
        q = np.clip((coord - (extent - thickness)) / thickness, 0.0, 1.0)
        w *= np.exp(-((spec.damping_strength * q) ** 2))
    return w


def _sponge_masks(field: MaterialField, spec: AbsorbingLayerSpec):
    """Damping masks evaluated at each staggered grid's node positions."""
    dx, nx, nz = field.dx, field.nx, field.nz
    xc = (np.arange(nx) + 0.5) * dx   # cell-center / vz x-coords
    xf = np.arange(nx + 1) * dx       # face / corner x-coords
    zc = (np.arange(nz) + 0.5) * dx
    zf = np.arange(nz + 1) * dx

    def mask(xcoords, zcoords):
        wx = _sponge_profile(xcoords, field.width, spec, ("left", "right"), dx)
        wz = _sponge_profile(zcoords, field.depth, spec, ("top", "bottom"), dx)
        return wz[:, None] * wx[None, :]

    return (
        mask(xf, zc),  # vx
        mask(xc, zf),  # vz
        mask(xc, zc),  # sxx
        mask(xc, zc),  # szz
        mask(xf, zf),  # sxz
    )


_coeff_cache: "weakref.WeakKeyDictionary[MaterialField, dict]" = weakref.WeakKeyDictionary()


def _coefficients(field: MaterialField, dt: float, sponge: AbsorbingLayerSpec) -> _Coefficients:
    per_field = _coeff_cache.setdefault(field, {})
    key = (dt, sponge)
    if key not in per_field:
        per_field[key] = _Coefficients(field, dt, sponge)
    return per_field[key]


def _advance(state: WavefieldState, coeffs: _Coefficients) -> None:
    kernels.update_velocity(
        state.vx, state.vz, state.sxx, state.szz, state.sxz, coeffs.bx, coeffs.bz, coeffs.dtx
    )
    kernels.update_stress(
        state.sxx, state.szz, state.sxz, state.vx, state.vz,
        coeffs.lam, coeffs.lam2mu, coeffs.mu_c, coeffs.dtx,
    )
    if coeffs.sponge_masks is not None:
        kernels.scale_fields(state.field_arrays(), coeffs.sponge_masks)
    state.step_index += 1
    state.time = state.step_index * state.dt


_BLOWUP_LIMIT = 1e100


def _check_finite(state: WavefieldState) -> None:
    # catches NaN/Inf, and flags runaway growth long before float64 overflow
    extrema = (
        float(np.max(state.vx)), float(np.min(state.vx)),
        float(np.max(state.vz)), float(np.min(state.vz)),
    )
    if not math.isfinite(sum(extrema)):
        raise NumericalInstabilityError(state.step_index)
    if max(abs(e) for e in extrema) > _BLOWUP_LIMIT:
        raise NumericalInstabilityError(
            state.step_index,
            f"wavefield magnitude exceeded {_BLOWUP_LIMIT:g} at step {state.step_index}",
        )


def step(state: WavefieldState, field: MaterialField, params: SolverParams) -> WavefieldState:
    """Advance one leapfrog step; returns a new state, inputs untouched."""
    if state.sxx.shape != (field.nz, field.nx):
        raise ConfigurationError("state shape does not match the material field")
    coeffs = _coefficients(field, params.dt, params.sponge)
    out = state.copy()
    out.dt = params.dt
    _advance(out, coeffs)
    _check_finite(out)
    return out


def total_energy(
    state: WavefieldState,
    field: MaterialField,
    sponge: AbsorbingLayerSpec | None = None,
) -> float:
    """Discrete elastic energy per unit out-of-plane thickness (J/m).

    Kinetic term pairs each stored half-step velocity with its virtual
    advance through the current stresses (0.5 rho v^- v^+): this staggered
    product is the quantity the leapfrog scheme conserves exactly, whereas
    0.5 rho |v|^2 at a single half step oscillates at O(omega dt). Strain
    term is the plane-strain compliance energy; void cells (and sponge
    cells, when a spec is passed) are excluded.
    """
    coeffs = _coefficients(field, state.dt, sponge or AbsorbingLayerSpec())
    vxa = state.vx.copy()
    vza = state.vz.copy()
    kernels.update_velocity(
        vxa, vza, state.sxx, state.szz, state.sxz, coeffs.bx, coeffs.bz, coeffs.dtx
    )
    if coeffs.sponge_masks is not None:
        wvx, wvz, wc, _, wcor = coeffs.sponge_masks
        in_vx, in_vz, in_c, in_cor = wvx >= 1.0, wvz >= 1.0, wc >= 1.0, wcor >= 1.0
    else:
        in_vx = in_vz = in_c = in_cor = slice(None)

    kinetic = 0.5 * (
        np.sum((coeffs.fx * state.vx * vxa)[in_vx])
        + np.sum((coeffs.fz * state.vz * vza)[in_vz])
    )
    strain_n = 0.5 * np.sum(
        (
            coeffs.comp_a * (state.sxx**2 + state.szz**2)
            - 2.0 * coeffs.comp_b * state.sxx * state.szz
        )[in_c]
    )
    strain_s = np.sum((coeffs.inv_2mu_c * state.sxz**2)[in_cor])
    return float((kinetic + strain_n + strain_s) * field.dx**2)


class TransducerSource:
    """Vertical traction pulse distributed over the transducer aperture."""

    def __init__(self, transducer: TransducerSpec, pulse: PulseWaveform):
        self.transducer = transducer
        self.pulse = pulse

    def _injection(self, field: MaterialField, coeffs: _Coefficients):
        cols = self.transducer.face_indices(field)
        rows = np.zeros_like(cols)
        return rows, cols, coeffs.dtx * coeffs.bz[rows, cols]


class VerticalPointForce:
    """Vertical line-force pulse at the nearest vz node to `position`."""

    def __init__(self, position: tuple[float, float], pulse: PulseWaveform):
        self.position = position
        self.pulse = pulse

    def _injection(self, field: MaterialField, coeffs: _Coefficients):
        x, z = self.position
        i = min(max(int(round(x / field.dx - 0.5)), 0), field.nx - 1)
        j = min(max(int(round(z / field.dx)), 0), field.nz)
        rows = np.array([j])
        cols = np.array([i])
        return rows, cols, coeffs.dtx * coeffs.bz[rows, cols]


def apply_source(
    state: WavefieldState,
    field: MaterialField,
    transducer: TransducerSpec,
    pulse: PulseWaveform,
    t: float,
) -> WavefieldState:
    """Return a state with the transducer traction at time `t` added.

    The velocity increment per face is tau(t) dt / (rho_face dx), the same
    scaling the update scheme applies to internal stress gradients.
    """
    coeffs = _coefficients(field, state.dt, AbsorbingLayerSpec())
    out = state.copy()
    rows, cols, coef = TransducerSource(transducer, pulse)._injection(field, coeffs)
    out.vz[rows, cols] += sample_waveform(pulse, t) * coef
    return out


def iter_simulation(
    field: MaterialField,
    params: SolverParams,
    source,
    probes: Sequence[ReceiverSpec] = (),
    frame_every: int = 1,
    trace_out: np.ndarray | None = None,
) -> Iterator[WavefieldState]:
    """Run the leapfrog, yielding the live state after every
    `frame_every`-th step. The yielded state is the working buffer: copy it
    if it must outlive the iteration step.

    Probe samples (one per step) are written into `trace_out`, shaped
    (len(probes), n_steps), if given.
    """
    if frame_every < 1:
        raise ConfigurationError("frame_every must be >= 1")
    coeffs = _coefficients(field, params.dt, params.sponge)
    state = WavefieldState.zeros(field, params.dt)
    injection = None
    pulse = None
    if source is not None:
        injection = source._injection(field, coeffs)
        pulse = source.pulse

    for k in range(params.n_steps):
        if injection is not None:
            t = k * params.dt
            if t <= pulse.support:
                rows, cols, coef = injection
                state.vz[rows, cols] += sample_waveform(pulse, t) * coef
        _advance(state, coeffs)
        _check_finite(state)
        if trace_out is not None:
            for p, probe in enumerate(probes):
                trace_out[p, k] = record_receiver(state, field, probe)
        if state.step_index % frame_every == 0:
            yield state


def run_simulation(
    field: MaterialField,
    params: SolverParams,
    source,
    probes: Sequence[ReceiverSpec] = (),
    frame_every: int = 1,
    on_frame: Callable[[WavefieldState], None] | None = None,
    collect_frames: bool = True,
) -> tuple[list[WavefieldState], list[Trace]]:
    """Run n_steps of the solver.

    Returns floor(n_steps / frame_every) snapshots (times k * frame_every * dt)
    and one Trace per probe sampled after every step. With an `on_frame`
    callback the live state is passed instead of (or in addition to)
    collecting copies; deterministic for fixed inputs.
    """
    frames: list[WavefieldState] = []
    traces = np.zeros((len(probes), params.n_steps))
    for live in iter_simulation(field, params, source, probes, frame_every, trace_out=traces):
        if on_frame is not None:
            on_frame(live)
        if collect_frames:
            frames.append(live.copy())
    return frames, [Trace(traces[p].copy(), params.dt, t0=params.dt) for p in range(len(probes))]


_DUMP_ORDER = ("vx", "vz", "sxx", "szz", "sxz")


def save_wavefield(state: WavefieldState, field: MaterialField, path) -> None:
    """Dump the state as flat row-major float64 with a sidecar text header.

    The binary file concatenates vx, vz, sxx, szz, sxz; `<path>.hdr` lists
    nx, nz, dx, dt, step, time, and the array order.
    """
    path = str(path)
    blob = np.concatenate([getattr(state, n).ravel() for n in _DUMP_ORDER])
    blob.astype("<f8").tofile(path)
    header = (
        f"nx={field.nx}\nnz={field.nz}\ndx={field.dx!r}\ndt={state.dt!r}\n"
        f"step={state.step_index}\ntime={state.time!r}\norder={','.join(_DUMP_ORDER)}\n"
    )
    with open(path + ".hdr", "w", encoding="ascii") as fh:
        fh.write(header)


def load_wavefield(path) -> WavefieldState:
    """Reload a state written by save_wavefield."""
    path = str(path)
    meta = {}
    with open(path + ".hdr", encoding="ascii") as fh:
        for line in fh:
            key, _, value = line.strip().partition("=")
            meta[key] = value
    nx, nz = int(meta["nx"]), int(meta["nz"])
    raw = np.fromfile(path, dtype="<f8")
    shapes = {
        "vx": (nz, nx + 1),
        "vz": (nz + 1, nx),
        "sxx": (nz, nx),
        "szz": (nz, nx),
        "sxz": (nz + 1, nx + 1),
    }
    arrays = {}
    offset = 0
    for name in meta["order"].split(","):
        shape = shapes[name]
        size = shape[0] * shape[1]
        arrays[name] = raw[offset : offset + size].reshape(shape).copy()
        offset += size
    return WavefieldState(
        time=float(meta["time"]),
        step_index=int(meta["step"]),
        dt=float(meta["dt"]),
        **arrays,
    )
