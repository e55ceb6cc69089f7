#!/usr/bin/env python3
"""Benchmark the compiled stencil kernels against the NumPy fallback.

Times the two leapfrog passes (velocity + stress update) per step on a
grid of the requested size and reports steps/s for each backend.

    python benchmarks/bench_stencil.py --nx 667 --nz 333 --steps 200
"""

import argparse
import time

import numpy as np

import luvtsim as lv
from luvtsim import stencil_numpy
from luvtsim.solver import AbsorbingLayerSpec, _Coefficients

try:
    from luvtsim import _stencil
except ImportError:
    _stencil = None


def _setup(nx: int, nz: int):
    width, depth = nx * 0.15e-3, nz * 0.15e-3
    geometry = lv.SpecimenGeometry(
        width=width, depth=depth, view_region=lv.Rect(0.0, 0.0, width, depth)
    )
    field = lv.rasterize_specimen(geometry, lv.MaterialSpec(), dx=0.15e-3)
    state = lv.WavefieldState.zeros(field, lv.max_stable_dt(field, 0.9))
    rng = np.random.default_rng(0)
    state.vz[:] = 1e-9 * rng.standard_normal(state.vz.shape)
    coeffs = _Coefficients(field, state.dt, AbsorbingLayerSpec())
    return state, coeffs


def _run(kernels, state, coeffs, steps: int) -> float:
    s = state.copy()
    start = time.perf_counter()
    for _ in range(steps):
        kernels.update_velocity(s.vx, s.vz, s.sxx, s.szz, s.sxz, coeffs.bx, coeffs.bz, coeffs.dtx)
        kernels.update_stress(
            s.sxx, s.szz, s.sxz, s.vx, s.vz, coeffs.lam, coeffs.lam2mu, coeffs.mu_c, coeffs.dtx
        )
    return time.perf_counter() - start


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--nx", type=int, default=667)
    parser.add_argument("--nz", type=int, default=333)
    parser.add_argument("--steps", type=int, default=200)
    args = parser.parse_args()

    state, coeffs = _setup(args.nx, args.nz)
    cells = args.nx * args.nz

    print(f"grid {args.nx} x {args.nz} ({cells} cells), {args.steps} steps per backend\n")
    print(f"{'backend':<10} {'total s':>10} {'ms/step':>10} {'steps/s':>10} {'Mcell/s':>10}")

    results = {}
    backends = [("python", stencil_numpy)]
    if _stencil is not None:
        backends.append(("native", _stencil))
    for name, kernels in backends:
        _run(kernels, state, coeffs, 3)  # warmup
        elapsed = _run(kernels, state, coeffs, args.steps)
        per_step = elapsed / args.steps
        results[name] = per_step
        print(
            f"{name:<10} {elapsed:>10.3f} {per_step * 1e3:>10.3f} "
            f"{1.0 / per_step:>10.1f} {cells / per_step / 1e6:>10.1f}"
        )

    if "native" in results:
        print(f"\nnative speedup over python: {results['python'] / results['native']:.1f}x")
    else:
        print("\ncompiled extension not available; only the fallback was timed")


if __name__ == "__main__":
    main()
