"""Command-line front end.

Subcommands:
  solve     solve the occupation-time CDF grid with a chosen engine
  circle    tabulate a 2-D expected-norm unit circle
  sphere    tabulate a 3-D expected-norm unit sphere (weak extension)
  validate  run the invariant battery and emit a machine-readable report

Every output file is written atomically and accompanied by a JSON manifest
holding the exact parameters (including seeds) needed to reproduce it.
Exit codes: 0 success, 1 validation failure, 2 invalid arguments.

The default output directory is $GSRN_OUT, falling back to ./out.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, ctmc, distribution as dist, expected_norm as en
from .validation import run_validation


@dataclass
class RunManifest:
    command: str
    parameters: dict
    outputs: list = field(default_factory=list)
    version: str = __version__

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))


def _atomic_write(path: Path, writer) -> None:
    """Write via a sibling temp file and rename into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    # keep the real extension so format-sniffing writers (matplotlib) work
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp" + path.suffix)
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _write_text(path: Path, text: str) -> None:
    _atomic_write(path, lambda tmp: Path(tmp).write_text(text))


def _out_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get("GSRN_OUT", "out"))


def _solve_grid(args, store_states=None) -> dist.DistributionGrid:
    G = ctmc.build_pure_birth(args.n, getattr(args, "lam"))
    f = ctmc.RewardFunction.linear(args.n)
    engine = getattr(args, "engine", "upwind")
    if engine == "upwind":
        return dist.solve_upwind(G, f, args.grid, dt=args.dt,
                                 sigma=getattr(args, "sigma", 0.0),
                                 store_states=store_states)
    if engine == "integral":
        steps = None if args.dt is None else max(1, round(1.0 / args.dt))
        return dist.solve_integral_equation(args.n, args.lam, args.grid,
                                            time_steps=steps,
                                            store_states=store_states)
    if engine == "montecarlo":
        steps = max(1, round(1.0 / args.dt)) if args.dt else min(args.grid + 1, 200)
        return dist.monte_carlo_grid(G, f, args.grid, steps, 0,
                                     args.samples, args.seed)
    raise ValueError(f"unknown engine {engine!r}")


def _grid_params(args, extra=None) -> dict:
    p = {"n": args.n, "lambda": args.lam, "grid": args.grid,
         "dt": args.dt, "seed": getattr(args, "seed", None)}
    if extra:
        p.update(extra)
    return p


def cmd_solve(args) -> int:
    grid = _solve_grid(args)
    out = _out_dir(args)
    base = f"grid_{args.engine}_n{args.n}_lam{args.lam:g}_N{args.grid}"
    csv_path = out / f"{base}.csv"
    png_path = out / f"{base}.png"
    _atomic_write(csv_path, grid.to_csv)
    from .plotting import plot_distribution_surface
    _atomic_write(png_path, lambda tmp: plot_distribution_surface(grid, tmp))
    manifest = RunManifest(
        "solve",
        _grid_params(args, {"engine": args.engine, "sigma": args.sigma,
                            "samples": args.samples, **grid.manifest()}),
        [str(csv_path), str(png_path)])
    _write_text(out / f"{base}.manifest.json", manifest.to_json())
    print(f"wrote {csv_path}")
    return 0


def cmd_circle(args) -> int:
    grid = _solve_grid(args, store_states=(0,))
    table = en.unit_circle(grid, args.angles)
    out = _out_dir(args)
    base = f"circle_n{args.n}_lam{args.lam:g}_N{args.grid}"
    csv_path = out / f"{base}.csv"
    svg_path = out / f"{base}.svg"
    png_path = out / f"{base}.png"
    _atomic_write(csv_path, table.to_csv)
    _atomic_write(svg_path, lambda tmp: en.circle_to_svg(table, tmp))
    from .plotting import plot_unit_circle
    _atomic_write(png_path, lambda tmp: plot_unit_circle(table, tmp))
    manifest = RunManifest("circle",
                           _grid_params(args, {"angles": args.angles,
                                               **grid.manifest()}),
                           [str(csv_path), str(svg_path), str(png_path)])
    _write_text(out / f"{base}.manifest.json", manifest.to_json())
    print(f"wrote {csv_path}")
    return 0


def cmd_sphere(args) -> int:
    grid = _solve_grid(args, store_states=(0,))
    table = en.unit_sphere_3d(grid, args.resolution)
    out = _out_dir(args)
    base = f"sphere_n{args.n}_lam{args.lam:g}_N{args.grid}_r{args.resolution}"
    csv_path = out / f"{base}.csv"
    obj_path = out / f"{base}.obj"
    png_path = out / f"{base}.png"
    _atomic_write(csv_path, table.to_csv)
    _atomic_write(obj_path, lambda tmp: en.sphere_to_obj(table, tmp))
    from .plotting import plot_unit_sphere
    _atomic_write(png_path, lambda tmp: plot_unit_sphere(table, tmp))
    manifest = RunManifest("sphere",
                           _grid_params(args, {"resolution": args.resolution,
                                               **grid.manifest()}),
                           [str(csv_path), str(obj_path), str(png_path)])
    _write_text(out / f"{base}.manifest.json", manifest.to_json())
    print(f"wrote {csv_path}")
    return 0


def cmd_validate(args) -> int:
    report = run_validation(seed=args.seed, quick=args.quick)
    out = _out_dir(args)
    path = out / ("validate_quick.json" if args.quick else "validate.json")
    _write_text(path, report.to_json())
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    print(f"report written to {path}")
    return 0 if report.ok else 1


def _add_grid_args(p, include_engine=False, include_sigma=False):
    p.add_argument("--n", type=int, required=True,
                   help="number of birth steps (states 0..n)")
    p.add_argument("--lambda", dest="lam", type=float, required=True,
                   help="uniform birth rate")
    p.add_argument("--grid", type=int, required=True,
                   help="internal x-grid point count N (spacing 1/(N+1))")
    p.add_argument("--dt", type=float, default=None,
                   help="time step (default: CFL/positivity bound)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100_000,
                   help="Monte Carlo sample count")
    if include_engine:
        p.add_argument("--engine", choices=("upwind", "integral", "montecarlo"),
                       default="upwind")
    if include_sigma:
        p.add_argument("--sigma", type=float, default=0.0,
                       help="Gaussian smoothing width (0 = sharp initial data)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gsrn",
        description="Markovian random norms: occupation-time CDF solvers "
                    "and expected-norm unit balls")
    ap.add_argument("--out", default=None,
                    help="output directory (default: $GSRN_OUT or ./out)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the CDF grid")
    _add_grid_args(p, include_engine=True, include_sigma=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("circle", help="expected-norm unit circle")
    _add_grid_args(p)
    p.add_argument("--angles", type=int, default=65,
                   help="direction count in the first octant")
    p.set_defaults(func=cmd_circle)

    p = sub.add_parser("sphere", help="expected-norm unit sphere (3-D)")
    _add_grid_args(p)
    p.add_argument("--resolution", type=int, default=32,
                   help="octant mesh resolution")
    p.set_defaults(func=cmd_sphere)

    p = sub.add_parser("validate", help="run the invariant battery")
    p.add_argument("--quick", action="store_true",
                   help="reduced sample counts")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
