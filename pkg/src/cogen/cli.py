"""Command-line interface.

Every subcommand takes ``--scene``, either a JSON file or the name of a
shipped scene (``squares2d``, ``cam2d``, ``cam3d``, ``bolt3d``; a ``.json``
suffix is accepted). ``--coarsen F`` and ``--timesteps K`` derive a cheaper
version of the scene. Exit status: 0 success, 2 invalid input, 3 numerical
failure, 4 oracle mismatch.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .analysis import contact_fraction, min_distance_series, oracle_global_measure, periodicity_score
from .collision import global_measure, sweep, unsweep
from .correlation import assemble, cache_key, load_matrix, save_matrix
from .errors import ConfigurationError, DimensionError, NumericalError, OracleMismatch, ValidationError
from .geometry import DensityField
from .io import export_field, read_raw, write_convergence_csv, write_raw, write_table_csv
from .optimizer import OptimizerConfig, cogenerate, gamma_sweep
from .scene import BUILTIN_SCENES, SceneConfig, load_builtin_scene, parse_scene

__all__ = ["run_command", "main", "load_scene", "parse_gammas"]

log = logging.getLogger("cogen")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_ORACLE = 0, 2, 3, 4


def load_scene(ref: str, coarsen: float | None = None, timesteps: int | None = None) -> SceneConfig:
    path = Path(ref)
    if path.is_file():
        scene = parse_scene(path)
    elif path.name.removesuffix(".json") in BUILTIN_SCENES and not path.exists():
        scene = load_builtin_scene(path.name)
    else:
        raise ConfigurationError(f"{ref}: no such scene file or built-in scene")
    if coarsen is not None or timesteps is not None:
        scene = scene.rescaled(coarsen or 1, K=timesteps)
    return scene


def parse_gammas(text: str) -> list:
    """``start:stop:step`` (inclusive of ``stop``) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigurationError(f"--gammas {text!r}: expected start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigurationError("--gammas: step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        values = [round(start + i * step, 12) for i in range(count)]
    else:
        values = [float(p) for p in text.split(",") if p.strip()]
    if not values:
        raise ConfigurationError("--gammas: empty list")
    for g in values:
        if not 0.0 <= g <= 1.0:
            raise ValidationError(f"--gammas: gamma must lie in [0, 1], got {g}")
    return values


def _cache_paths(scene: SceneConfig, override: str | None):
    prefix = override if override is not None else scene.cache
    if prefix is None:
        return None
    base = Path(prefix)
    return base / "W12.cogw", base / "W21.cogw"


def _keys(scene: SceneConfig):
    return (cache_key(scene.grid1, scene.grid2, scene.motion, scene.K),
            cache_key(scene.grid2, scene.grid1, scene.motion, scene.K))


def _assemble_both(scene: SceneConfig, workers: int):
    traj = scene.trajectory()
    W12 = assemble(scene.grid1, scene.grid2, traj.leg_12, workers=workers)
    W21 = assemble(scene.grid2, scene.grid1, traj.leg_21, workers=workers)
    return W12, W21


def _matrices(scene: SceneConfig, args):
    """Load both matrices from the cache when it is current, otherwise assemble them."""
    paths = _cache_paths(scene, args.cache)
    if paths is not None and all(p.is_file() for p in paths):
        k12, k21 = _keys(scene)
        try:
            return (load_matrix(paths[0], scene.grid1, scene.grid2, expect_key=k12),
                    load_matrix(paths[1], scene.grid2, scene.grid1, expect_key=k21))
        except ConfigurationError as exc:
            log.warning("ignoring cache: %s", exc)
    return _assemble_both(scene, args.workers)


def _out_dir(scene: SceneConfig, args) -> Path:
    out = Path(args.out if args.out is not None else scene.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _optimizer_config(scene: SceneConfig, args, gamma: float) -> OptimizerConfig:
    overrides = dict(scene.optimizer)
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigurationError(f"--set {item!r}: expected key=value")
        try:
            overrides[key] = json.loads(value)
        except json.JSONDecodeError:
            raise ConfigurationError(f"--set {item!r}: value is not valid JSON") from None
    if args.max_iters is not None:
        overrides["max_iters"] = args.max_iters
    try:
        return OptimizerConfig.from_dict(overrides, gamma)
    except TypeError as exc:
        raise ConfigurationError(f"optimizer settings: {exc}") from None


# --------------------------------------------------------------------------
# subcommands


def cmd_precompute(scene, args):
    paths = _cache_paths(scene, args.cache)
    if paths is None:
        raise ConfigurationError("scene has no cache path; pass --cache DIR")
    t0 = time.perf_counter()
    W12, W21 = _assemble_both(scene, args.workers)
    elapsed = time.perf_counter() - t0
    paths[0].parent.mkdir(parents=True, exist_ok=True)
    k12, k21 = _keys(scene)
    save_matrix(W12, paths[0], k12)
    save_matrix(W21, paths[1], k21)
    print(f"assembled in {elapsed:.2f} s: W12 {W12.shape} nnz={W12.nnz}, W21 {W21.shape} nnz={W21.nnz}")
    print(f"wrote {paths[0]} and {paths[1]}")
    return EXIT_OK


def _print_result(res, gamma):
    last = res.history[-1] if res.history else None
    state = "converged" if res.converged else "not converged"
    print(f"gamma={gamma:g}: {state} after {len(res.history)} iterations; "
          f"v1={res.v1:.6g} v2={res.v2:.6g} cleared={res.cleared}")
    if last is not None:
        print(f"  final g21={last.g21:.3e} g12={last.g12:.3e} h={last.h:.3e} delta={last.delta:.3e}")


def cmd_optimize(scene, args):
    gamma = args.gamma if args.gamma is not None else scene.gamma
    config = _optimizer_config(scene, args, gamma)
    W12, W21 = _matrices(scene, args)
    rho1, rho2 = scene.initial_fields()
    res = cogenerate(rho1, rho2, W12, W21, config)
    out = _out_dir(scene, args)
    write_raw(res.rho1, out / "rho1.bin")
    write_raw(res.rho2, out / "rho2.bin")
    write_raw(DensityField.from_mask(scene.grid1, res.solid1), out / "solid1.bin")
    write_raw(DensityField.from_mask(scene.grid2, res.solid2), out / "solid2.bin")
    write_convergence_csv(res.history, out / "convergence.csv")
    summary = {"gamma": gamma, "converged": res.converged, "iterations": len(res.history),
               "v1": res.v1, "v2": res.v2, "cleared": res.cleared,
               "thresholded_g21": res.thresholded_g21, "thresholded_g12": res.thresholded_g12}
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    _print_result(res, gamma)
    print(f"wrote {out}/rho1.bin, rho2.bin, solid1.bin, solid2.bin, convergence.csv")
    return EXIT_OK


def cmd_gamma_sweep(scene, args):
    gammas = parse_gammas(args.gammas) if args.gammas is not None else list(scene.gammas)
    config = _optimizer_config(scene, args, gammas[0])
    W12, W21 = _matrices(scene, args)
    rho1, rho2 = scene.initial_fields()
    rows, results = gamma_sweep(rho1, rho2, W12, W21, gammas, config)
    out = _out_dir(scene, args)
    write_table_csv(("gamma", "v1", "v2", "sum"), rows, out / "gamma_sweep.csv")
    print(f"{'gamma':>6} {'v1':>12} {'v2':>12} {'sum':>12} converged")
    for (g, v1, v2, total), res in zip(rows, results):
        print(f"{g:6.2f} {v1:12.6g} {v2:12.6g} {total:12.6g} {res.converged}")
    print(f"wrote {out / 'gamma_sweep.csv'}")
    return EXIT_OK


def cmd_unsweep(scene, args):
    traj = scene.trajectory()
    rho1, rho2 = scene.initial_fields()
    if args.fixed == "body1":
        result = unsweep(rho1, traj.leg_12, scene.grid2, args.theta)
        name = "unsweep_body2.bin"
    else:
        result = unsweep(rho2, traj.leg_21, scene.grid1, args.theta)
        name = "unsweep_body1.bin"
    out = _out_dir(scene, args)
    write_raw(result, out / name)
    print(f"unsweep of fixed {args.fixed}: measure {result.values.sum() * result.grid.cell_measure:.6g}; "
          f"wrote {out / name}")
    return EXIT_OK


def cmd_sweep(scene, args):
    traj = scene.trajectory()
    rho1, rho2 = scene.initial_fields()
    if args.body == "body2":
        result = sweep(rho2, traj.leg_21, scene.grid1, args.theta)
    else:
        result = sweep(rho1, traj.leg_12, scene.grid2, args.theta)
    name = f"sweep_{args.body}.bin"
    out = _out_dir(scene, args)
    write_raw(result, out / name)
    print(f"sweep of {args.body}: measure {result.values.sum() * result.grid.cell_measure:.6g}; "
          f"wrote {out / name}")
    return EXIT_OK


def cmd_metrics(scene, args):
    out = Path(args.out if args.out is not None else scene.output_dir)
    rho1 = read_raw(args.rho1 or out / "solid1.bin", scene.grid1)
    rho2 = read_raw(args.rho2 or out / "solid2.bin", scene.grid2)
    series = min_distance_series(rho1, rho2, scene.trajectory(), args.theta)
    tol = args.tolerance
    fraction = contact_fraction(series, tol)
    out.mkdir(parents=True, exist_ok=True)
    write_table_csv(("k", "t", "distance"),
                    [(k, t, v) for k, (t, v) in enumerate(zip(series.times, series.values))],
                    out / "distance.csv")
    print(f"distance: mean={series.mean:.6g} min={series.min:.6g} contact_fraction={fraction:.4f}")
    if args.period is not None:
        axis = {"x": 0, "y": 1, "z": 2}[args.axis]
        for name, field in (("body1", rho1), ("body2", rho2)):
            if axis < field.grid.dimension:
                print(f"periodicity {name} axis={args.axis} shift={args.period}: "
                      f"{periodicity_score(field, axis, args.period):.4f}")
    print(f"wrote {out / 'distance.csv'}")
    return EXIT_OK


def cmd_oracle_check(scene, args):
    W12, W21 = _matrices(scene, args)
    rho1, rho2 = scene.initial_fields()
    g21 = global_measure(rho1, rho2, W12)
    g12 = global_measure(rho2, rho1, W21)
    oracle = oracle_global_measure(scene.shape1, scene.shape2, scene.trajectory(), args.samples, scene.grid1)
    scale = max(abs(oracle), 1e-300)
    err21, err12 = abs(g21 - oracle) / scale, abs(g12 - oracle) / scale
    print(f"g21={g21:.6g} g12={g12:.6g} oracle={oracle:.6g} "
          f"relative error {err21:.4%} / {err12:.4%} (tolerance {args.tolerance:.2%})")
    if oracle == 0.0 and g21 == 0.0 and g12 == 0.0:
        return EXIT_OK
    if max(err21, err12) > args.tolerance:
        raise OracleMismatch(f"matrix and quadrature measures differ by {max(err21, err12):.2%}")
    return EXIT_OK


def cmd_export(scene, args):
    field = read_raw(args.input)
    path = export_field(field, args.format, args.output)
    print(f"wrote {path}")
    return EXIT_OK


# --------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cogen", description="Co-generation of collision-free shape pairs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def scene_cmd(name, help_text, func):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scene", required=True, help="scene JSON file or built-in scene name")
        p.add_argument("--coarsen", type=float, default=None, help="multiply the cell size by this factor")
        p.add_argument("--timesteps", type=int, default=None, help="override the number of timesteps")
        p.add_argument("--out", default=None, help="output directory (default: the scene's output_dir)")
        p.add_argument("--cache", default=None, help="matrix cache directory (default: the scene's cache)")
        p.add_argument("--workers", type=int, default=1)
        p.set_defaults(func=func)
        return p

    scene_cmd("precompute", "assemble and cache both correlation matrices", cmd_precompute)
    for name, help_text, func in (("optimize", "co-generate for one gamma", cmd_optimize),
                                  ("gamma-sweep", "co-generate for a list of gammas", cmd_gamma_sweep)):
        p = scene_cmd(name, help_text, func)
        if name == "optimize":
            p.add_argument("--gamma", type=float, default=None)
        else:
            p.add_argument("--gammas", default=None, help="start:stop:step or comma list")
        p.add_argument("--max-iters", type=int, default=None)
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="optimizer override (JSON value)")
    p = scene_cmd("unsweep", "largest set on one body that never hits the other's initial shape", cmd_unsweep)
    p.add_argument("--fixed", choices=("body1", "body2"), default="body1")
    p.add_argument("--theta", type=float, default=0.5)
    p = scene_cmd("sweep", "swept region of one body's initial shape in the other's frame", cmd_sweep)
    p.add_argument("--body", choices=("body1", "body2"), default="body2")
    p.add_argument("--theta", type=float, default=0.5)
    p = scene_cmd("metrics", "distance series, contact fraction and periodicity of saved fields", cmd_metrics)
    p.add_argument("--rho1", default=None)
    p.add_argument("--rho2", default=None)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--tolerance", type=float, default=None, help="contact tolerance (default: cell diagonal)")
    p.add_argument("--period", type=int, default=None, help="shift in cells for the periodicity score")
    p.add_argument("--axis", choices=("x", "y", "z"), default="z")
    p = scene_cmd("oracle-check", "compare matrix measures with direct quadrature", cmd_oracle_check)
    p.add_argument("--samples", type=int, default=8)
    p.add_argument("--tolerance", type=float, default=0.05)
    p = sub.add_parser("export", help="convert a raw field file to pgm, vtk or raw")
    p.add_argument("--input", required=True)
    p.add_argument("--format", required=True, choices=("pgm", "vtk", "raw"))
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_export)
    return parser


def run_command(argv) -> int:
    """Run one subcommand and return its exit status."""
    parser = _parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        scene = None
        if args.command != "export":
            scene = load_scene(args.scene, args.coarsen, args.timesteps)
        return args.func(scene, args)
    except OracleMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigurationError, ValidationError, DimensionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
