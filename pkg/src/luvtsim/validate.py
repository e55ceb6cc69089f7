"""Built-in physics oracle suite: CFL, energy, wave speed, reciprocity.

Each check runs a purpose-built simulation and compares a measured number
against first-principles expectations (straight-line time of flight,
energy conservation of the lossless scheme, source/receiver symmetry).
The `validate` CLI subcommand runs all four and reports the measurements;
the acceptance tests reuse the same entry points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import RunConfig, default_config
from .errors import NumericalInstabilityError
from .materials import DefectSpec, insert_cavity
from .solver import (
    SolverParams,
    TransducerSource,
    VerticalPointForce,
    iter_simulation,
    max_stable_dt,
    run_simulation,
    total_energy,
)
from .sources import ReceiverSpec, first_arrival_time


@dataclass
class CheckResult:
    name: str
    measured: float
    limit: float
    passed: bool
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.detail}"


def check_wave_speed(config: RunConfig | None = None, separation: float = 0.020) -> CheckResult:
    """Longitudinal time of flight between two on-axis probes vs c_L."""
    config = config or default_config()
    field = config.build_field()
    c_l = config.material.longitudinal_speed
    cx = config.transducer_center()
    z1 = 0.015
    z2 = z1 + separation
    sim_time = z2 / c_l + 2.5 * config.pulse().support
    dt = max_stable_dt(field, config.solver.courant)
    params = SolverParams(dt=dt, n_steps=math.ceil(sim_time / dt), courant_fraction=config.solver.courant)
    probes = [ReceiverSpec((cx, z1), "vz"), ReceiverSpec((cx, z2), "vz")]
    source = TransducerSource(config.transducer(), config.pulse())
    _, traces = run_simulation(
        field, params, source, probes, frame_every=params.n_steps, collect_frames=False
    )
    t1 = first_arrival_time(traces[0], 0.2)
    t2 = first_arrival_time(traces[1], 0.2)
    measured = t2 - t1
    expected = separation / c_l
    rel_err = abs(measured - expected) / expected
    return CheckResult(
        name="wave_speed",
        measured=rel_err,
        limit=0.01,
        passed=rel_err < 0.01,
        detail=(
            f"time of flight {measured * 1e6:.4f} us over {separation * 1e3:.1f} mm "
            f"(expected {expected * 1e6:.4f} us, error {rel_err * 100:.3f}%)"
        ),
    )


def check_cfl(config: RunConfig | None = None, n_steps: int = 5000) -> CheckResult:
    """Bounded field at courant 0.9; instability error at courant 2.0."""
    config = config or default_config()
    field = config.build_field()
    source = TransducerSource(config.transducer(), config.pulse())

    dt = max_stable_dt(field, 0.9)
    params = SolverParams(dt=dt, n_steps=n_steps, courant_fraction=0.9)
    half = n_steps // 2
    max_first = 0.0
    max_second = 0.0
    for live in iter_simulation(field, params, source, frame_every=50):
        peak = float(np.max(np.abs(live.vz)))
        if live.step_index <= half:
            max_first = max(max_first, peak)
        else:
            max_second = max(max_second, peak)
    ratio = max_second / max_first if max_first > 0 else math.inf

    unstable_dt = max_stable_dt(field, 2.0)
    blew_up = False
    try:
        run_simulation(
            field,
            SolverParams(dt=unstable_dt, n_steps=500, courant_fraction=2.0),
            source,
            frame_every=500,
            collect_frames=False,
        )
    except NumericalInstabilityError:
        blew_up = True

    passed = math.isfinite(ratio) and ratio <= 2.0 and blew_up
    return CheckResult(
        name="cfl",
        measured=ratio,
        limit=2.0,
        passed=passed,
        detail=(
            f"courant 0.9 bounded over {n_steps} steps (late/early peak ratio {ratio:.3f}); "
            f"courant 2.0 instability error {'raised' if blew_up else 'NOT raised'}"
        ),
    )


def check_energy(
    config: RunConfig | None = None, quiet_time: float = 2.0e-6, extra_steps: int = 2000
) -> CheckResult:
    """Relative energy drift after the source stops (sponge off, free boundaries)."""
    config = config or default_config()
    field = config.build_field()
    source = TransducerSource(config.transducer(), config.pulse())
    if config.pulse().support > quiet_time:
        raise ValueError("pulse must end before the quiet window starts")
    dt = max_stable_dt(field, config.solver.courant)
    settle = math.ceil(quiet_time / dt)
    params = SolverParams(dt=dt, n_steps=settle + extra_steps, courant_fraction=config.solver.courant)
    e_ref = None
    drift = 0.0
    for live in iter_simulation(field, params, source, frame_every=20):
        if live.time < quiet_time:
            continue
        energy = total_energy(live, field)
        if e_ref is None:
            e_ref = energy
        else:
            drift = max(drift, abs(energy - e_ref) / e_ref)
    return CheckResult(
        name="energy",
        measured=drift,
        limit=1e-4,
        passed=e_ref is not None and e_ref > 0 and drift < 1e-4,
        detail=f"relative drift {drift:.3e} over {extra_steps} steps after the source stopped",
    )


def check_reciprocity(config: RunConfig | None = None) -> CheckResult:
    """Swap a vertical point force and a vertical-velocity point receiver."""
    config = config or default_config()
    base = default_config()
    small = replace(
        base,
        material=config.material,
        geometry_cfg=replace(
            base.geometry_cfg, width=0.040, depth=0.025, view_x0=0.010, view_width=0.020, view_height=0.025
        ),
    )
    field = small.build_field()
    # off-center cavity breaks the mirror symmetry so the check is nontrivial
    field = insert_cavity(field, DefectSpec(center=(0.026, 0.014), diameter=0.002))
    dx = field.dx
    pulse = small.pulse()
    # positions snapped to vz nodes so interpolation is exact
    xa = (round(0.012 / dx - 0.5) + 0.5) * dx
    xb = (round(0.028 / dx - 0.5) + 0.5) * dx
    dt = max_stable_dt(field, small.solver.courant)
    sim_time = 12.0e-6
    params = SolverParams(dt=dt, n_steps=math.ceil(sim_time / dt), courant_fraction=small.solver.courant)

    def shoot(src_x: float, rec_x: float) -> np.ndarray:
        source = VerticalPointForce((src_x, 0.0), pulse)
        _, traces = run_simulation(
            field,
            params,
            source,
            [ReceiverSpec((rec_x, 0.0), "vz")],
            frame_every=params.n_steps,
            collect_frames=False,
        )
        return traces[0].values

    ab = shoot(xa, xb)
    ba = shoot(xb, xa)
    denom = float(np.linalg.norm(ab))
    rel = float(np.linalg.norm(ab - ba)) / denom if denom > 0 else math.inf
    return CheckResult(
        name="reciprocity",
        measured=rel,
        limit=0.02,
        passed=rel < 0.02,
        detail=f"source/receiver swap relative L2 error {rel:.3e}",
    )


def run_all(config: RunConfig | None = None) -> list[CheckResult]:
    config = config or default_config()
    return [
        check_wave_speed(config),
        check_cfl(config),
        check_energy(config),
        check_reciprocity(config),
    ]
