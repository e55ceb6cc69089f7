"""Command-line entry points: simulate, dataset, validate.

Exit codes: 0 success, 1 validation/configuration failure, 2 I/O or usage
error, 3 numerical instability.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .backend import BACKEND
from .config import RunConfig, default_config, load_config
from .dataset import GenerationError, generate_dataset
from .errors import (
    ConfigurationError,
    ImageWriteError,
    InvalidMaterialError,
    InvalidResolutionError,
    LuvtsimError,
    NumericalInstabilityError,
    PlacementError,
)
from .imaging import encode_image, extract_snapshot, normalize_sequence
from .materials import insert_cavity
from .solver import TransducerSource, iter_simulation, save_wavefield
from .validate import run_all

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_INSTABILITY = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="luvtsim",
        description="2D elastodynamic wave simulator and labeled dataset factory",
    )
    parser.add_argument("--version", action="version", version=f"luvtsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="render one image sequence")
    sim.add_argument("--config", type=Path, help="TOML config file (defaults when omitted)")
    sim.add_argument("--out", type=Path, required=True, help="output directory")
    sim.add_argument("--seed", type=int, help="override dataset.seed")
    sim.add_argument("--frames", type=int, help="override dataset.n_frames")
    sim.add_argument("--quiet", action="store_true", help="suppress progress output")
    sim.add_argument(
        "--dump-raw",
        action="store_true",
        help="also dump raw float64 wavefield snapshots with sidecar headers",
    )

    ds = sub.add_parser("dataset", help="generate the labeled dataset tree")
    ds.add_argument("--config", type=Path, help="TOML config file (defaults when omitted)")
    ds.add_argument("--out", type=Path, required=True, help="output directory")
    ds.add_argument("--seed", type=int, help="override dataset.seed")
    ds.add_argument("--locations", type=int, help="override dataset.n_locations")
    ds.add_argument("--frames", type=int, help="override dataset.n_frames")
    ds.add_argument("--quiet", action="store_true", help="suppress progress output")

    val = sub.add_parser("validate", help="run the built-in physics oracle suite")
    val.add_argument("--config", type=Path, help="TOML config file (defaults when omitted)")
    val.add_argument("--quiet", action="store_true", help="print only failures")
    return parser


def _load(args) -> RunConfig:
    config = load_config(args.config) if args.config else default_config()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "frames", None) is not None:
        overrides["n_frames"] = args.frames
    if getattr(args, "locations", None) is not None:
        overrides["n_locations"] = args.locations
    if overrides:
        config = replace(config, dataset=replace(config.dataset, **overrides))
    return config


def cmd_simulate(args) -> int:
    config = _load(args)
    field = config.build_field()
    defect = config.defect_spec()
    if defect is not None:
        field = insert_cavity(field, defect, margin=config.dataset.margin)
    params, frame_every = config.solver_params(field)
    source = TransducerSource(config.transducer(), config.pulse())
    spec = config.frame_spec()
    view = config.geometry().view_region

    out = Path(args.out)
    image_dir = out / "images"
    image_dir.mkdir(parents=True, exist_ok=True)
    raws = []
    times = []
    for live in iter_simulation(field, params, source, frame_every=frame_every):
        raws.append(extract_snapshot(live, field, view, spec))
        times.append(live.time)
        if args.dump_raw:
            save_wavefield(live, field, out / f"snapshot{live.step_index:06d}.f64")
    frames = normalize_sequence(raws, spec, times=times)
    for frame in frames:
        encode_image(frame, image_dir / f"frame{frame.frame_index:04d}.png")
    (out / "config.snapshot").write_text(config.snapshot_text(), encoding="utf-8")
    if not args.quiet:
        print(f"wrote {len(frames)} frames to {image_dir} (backend: {BACKEND})")
    return EXIT_OK


def cmd_dataset(args) -> int:
    config = _load(args)
    manifest = generate_dataset(config, args.out, seed=args.seed)
    if not args.quiet:
        n_locations = config.dataset.n_locations
        print(
            f"wrote {len(manifest.records)} images for {n_locations} defect locations "
            f"to {args.out} (digest {manifest.config_digest[:12]}, backend: {BACKEND})"
        )
    return EXIT_OK


def cmd_validate(args) -> int:
    config = _load(args)
    results = run_all(config)
    failed = [r for r in results if not r.passed]
    for result in results:
        if not args.quiet or not result.passed:
            print(result.line())
    if failed:
        return EXIT_VALIDATION
    if not args.quiet:
        print(f"all {len(results)} checks passed (backend: {BACKEND})")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = {
        "simulate": cmd_simulate,
        "dataset": cmd_dataset,
        "validate": cmd_validate,
    }[args.command]
    try:
        return handler(args)
    except NumericalInstabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    except GenerationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc.__cause__, NumericalInstabilityError):
            return EXIT_INSTABILITY
        if isinstance(exc.__cause__, (OSError, ImageWriteError)):
            return EXIT_IO
        return EXIT_VALIDATION
    except (
        ConfigurationError,
        InvalidMaterialError,
        InvalidResolutionError,
        PlacementError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ImageWriteError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except LuvtsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
