"""Scene configuration: two design domains, two initial shapes and a motion.

Scenes are JSON documents::

    {
      "name": "squares2d",
      "dimension": 2,
      "domains": {"body1": {"origin": [..], "spacing": .., "dims": [..]},
                  "body2": {...}},
      "shapes": {"body1": <shape>, "body2": <shape>},
      "motion": {"builtin": "counter_rotation", "params": {...}}
                or {"keyframes": {"body1": [[t, R, x], ...], "body2": [...]}},
      "timesteps": 500,
      "gamma": 0.5,                    # or "gammas": [0.0, 0.1, ...]
      "supersample": 8,
      "optimizer": {...},              # OptimizerConfig overrides
      "output_dir": "out",
      "cache": "cache/squares2d"       # prefix for the two matrix files
    }

Shape trees use the format of :func:`cogen.geometry.shape_from_dict`.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ValidationError
from .geometry import Grid, Shape, rasterize, shape_from_dict
from .motion import Trajectory, builtin_motion, keyframe_motion, sample_relative_motion

__all__ = [
    "SceneConfig",
    "parse_scene",
    "scene_from_dict",
    "load_builtin_scene",
    "BUILTIN_SCENES",
    "squares_scene",
    "cam2d_scene",
    "cam3d_scene",
    "screw_scene",
]

_TOP_KEYS = {"name", "dimension", "domains", "shapes", "motion", "timesteps", "gamma", "gammas",
             "supersample", "optimizer", "output_dir", "cache"}
_REQUIRED = {"dimension", "domains", "shapes", "motion", "timesteps"}
_OPTIMIZER_KEYS = {"max_iters", "delta_tol", "move_limit", "step", "penalty_init", "penalty_growth",
                   "penalty_max", "multiplier_init", "outer_every", "tol_g", "tol_h", "backtracks"}


@dataclass
class SceneConfig:
    dimension: int
    grid1: Grid
    grid2: Grid
    shape1: Shape
    shape2: Shape
    motion: dict
    K: int
    name: str = "scene"
    gammas: list = field(default_factory=lambda: [0.5])
    supersample: int = 8
    optimizer: dict = field(default_factory=dict)
    output_dir: str = "out"
    cache: str | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def gamma(self) -> float:
        return self.gammas[0]

    def motions(self):
        if "builtin" in self.motion:
            return builtin_motion(self.motion["builtin"], self.motion.get("params", {}))
        frames = self.motion["keyframes"]
        return keyframe_motion(frames["body1"]), keyframe_motion(frames["body2"])

    def trajectory(self) -> Trajectory:
        m1, m2 = self.motions()
        return sample_relative_motion(m1, m2, self.K)

    def initial_fields(self) -> tuple:
        return (rasterize(self.shape1, self.grid1, self.supersample),
                rasterize(self.shape2, self.grid2, self.supersample))

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)

    def rescaled(self, factor: float, K: int | None = None) -> "SceneConfig":
        """Same domains and shapes at ``factor`` times coarser spacing."""
        raw = self.to_dict()
        for body in ("body1", "body2"):
            dom = raw["domains"][body]
            dims = np.asarray(dom["dims"], dtype=float) / factor
            if not np.allclose(dims, np.round(dims)):
                raise ConfigurationError(f"dims {dom['dims']} are not divisible by {factor}")
            dom["dims"] = [int(round(v)) for v in dims]
            dom["spacing"] = dom["spacing"] * factor
        if K is not None:
            raw["timesteps"] = int(K)
        return scene_from_dict(raw)

    def with_overrides(self, **changes) -> "SceneConfig":
        raw = self.to_dict()
        raw.update(changes)
        return scene_from_dict(raw)


def _grid_from(spec, path) -> Grid:
    if not isinstance(spec, dict):
        raise ConfigurationError(f"{path}: expected an object")
    for key in ("origin", "spacing", "dims"):
        if key not in spec:
            raise ConfigurationError(f"{path}/{key}: missing field")
    extra = set(spec) - {"origin", "spacing", "dims"}
    if extra:
        raise ConfigurationError(f"{path}/{sorted(extra)[0]}: unknown field")
    try:
        return Grid(tuple(spec["origin"]), float(spec["spacing"]), tuple(spec["dims"]))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def scene_from_dict(raw: dict) -> SceneConfig:
    if not isinstance(raw, dict):
        raise ConfigurationError("/: scene must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"/{sorted(unknown)[0]}: unknown field")
    missing = _REQUIRED - set(raw)
    if missing:
        raise ConfigurationError(f"/{sorted(missing)[0]}: missing field")
    d = raw["dimension"]
    if d not in (2, 3):
        raise ConfigurationError("/dimension: must be 2 or 3")

    domains = raw["domains"]
    shapes = raw["shapes"]
    for key, obj in (("domains", domains), ("shapes", shapes)):
        if not isinstance(obj, dict) or set(obj) != {"body1", "body2"}:
            raise ConfigurationError(f"/{key}: expected exactly the keys body1 and body2")
    grid1 = _grid_from(domains["body1"], "/domains/body1")
    grid2 = _grid_from(domains["body2"], "/domains/body2")
    for name, grid in (("body1", grid1), ("body2", grid2)):
        if grid.dimension != d:
            raise ConfigurationError(f"/domains/{name}: dimension mismatch with /dimension")
    shape1 = shape_from_dict(shapes["body1"], "/shapes/body1")
    shape2 = shape_from_dict(shapes["body2"], "/shapes/body2")
    for name, shape in (("body1", shape1), ("body2", shape2)):
        if len(shape.bounds()[0]) != d:
            raise ConfigurationError(f"/shapes/{name}: dimension mismatch with /dimension")

    motion = raw["motion"]
    if not isinstance(motion, dict) or len(set(motion) & {"builtin", "keyframes"}) != 1:
        raise ConfigurationError("/motion: expected exactly one of 'builtin' or 'keyframes'")
    if "builtin" in motion:
        extra = set(motion) - {"builtin", "params"}
        if extra:
            raise ConfigurationError(f"/motion/{sorted(extra)[0]}: unknown field")
    else:
        frames = motion["keyframes"]
        if set(motion) != {"keyframes"} or not isinstance(frames, dict) or set(frames) != {"body1", "body2"}:
            raise ConfigurationError("/motion/keyframes: expected keys body1 and body2")

    K = raw["timesteps"]
    if not isinstance(K, int) or K < 1:
        raise ConfigurationError("/timesteps: must be an integer >= 1")
    if "gamma" in raw and "gammas" in raw:
        raise ConfigurationError("/gammas: give either gamma or gammas, not both")
    gammas = raw.get("gammas", [raw.get("gamma", 0.5)])
    if not isinstance(gammas, list) or not gammas:
        raise ConfigurationError("/gammas: must be a non-empty list")
    for i, g in enumerate(gammas):
        if not isinstance(g, (int, float)) or not 0.0 <= g <= 1.0:
            where = "/gamma" if "gamma" in raw else f"/gammas/{i}"
            raise ConfigurationError(f"{where}: gamma must lie in [0, 1], got {g!r}")
    supersample = raw.get("supersample", 8)
    if not isinstance(supersample, int) or supersample < 1:
        raise ConfigurationError("/supersample: must be an integer >= 1")
    optimizer = raw.get("optimizer", {})
    if not isinstance(optimizer, dict):
        raise ConfigurationError("/optimizer: expected an object")
    bad = set(optimizer) - _OPTIMIZER_KEYS
    if bad:
        raise ConfigurationError(f"/optimizer/{sorted(bad)[0]}: unknown field")

    scene = SceneConfig(
        dimension=d, grid1=grid1, grid2=grid2, shape1=shape1, shape2=shape2,
        motion=copy.deepcopy(motion), K=K, name=str(raw.get("name", "scene")),
        gammas=[float(g) for g in gammas], supersample=supersample, optimizer=dict(optimizer),
        output_dir=str(raw.get("output_dir", "out")), cache=raw.get("cache"), raw=copy.deepcopy(raw),
    )
    try:
        m1, m2 = scene.motions()
        for t in (0.0, 0.5, 1.0):
            for m in (m1, m2):
                if m(t).dimension != d:
                    raise ConfigurationError("/motion: dimension mismatch with /dimension")
    except (ValidationError, ConfigurationError) as exc:
        if str(exc).startswith("/motion"):
            raise
        raise ConfigurationError(f"/motion: {exc}") from None
    return scene


def parse_scene(path) -> SceneConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"{path}: no such scene file") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    return scene_from_dict(raw)


BUILTIN_SCENES = ("squares2d", "cam2d", "cam3d", "bolt3d")


def load_builtin_scene(name: str) -> SceneConfig:
    """Load one of the shipped scene files by name (``squares2d`` etc.)."""
    name = name.removesuffix(".json")
    if name not in BUILTIN_SCENES:
        raise ConfigurationError(f"unknown built-in scene {name!r}")
    text = resources.files("cogen.scenes").joinpath(f"{name}.json").read_text()
    return scene_from_dict(json.loads(text))


# --------------------------------------------------------------------------
# Builders for the shipped scenes


def _box(lo, hi):
    return {"box": {"min": list(map(float, lo)), "max": list(map(float, hi))}}


def _domain(origin, spacing, dims):
    return {"origin": list(map(float, origin)), "spacing": float(spacing), "dims": list(map(int, dims))}


def squares_scene(cells: int = 400, K: int = 500, side: float = 2.0, center_spacing: float = 1.6) -> dict:
    """Two counter-rotating squares whose initial positions overlap."""
    h = side / 2
    eps = side / cells
    return {
        "name": "squares2d",
        "dimension": 2,
        "domains": {"body1": _domain((-h, -h), eps, (cells, cells)),
                    "body2": _domain((center_spacing - h, -h), eps, (cells, cells))},
        "shapes": {"body1": _box((-h, -h), (h, h)),
                   "body2": _box((center_spacing - h, -h), (center_spacing + h, h))},
        "motion": {"builtin": "counter_rotation",
                   "params": {"center1": [0.0, 0.0], "center2": [center_spacing, 0.0]}},
        "timesteps": K,
        "gammas": [round(0.1 * i, 1) for i in range(11)],
    }


def cam2d_scene(cells: int = 400, K: int = 1000, L: float = 1.0) -> dict:
    """Square cam turning about the origin, follower block riding above it."""
    eps = L / cells
    h = L / 2
    y0 = 0.75 * L + L / 8 - L / 4
    return {
        "name": "cam2d",
        "dimension": 2,
        "domains": {"body1": _domain((-h, -h), eps, (cells, cells)),
                    "body2": _domain((-h, y0), eps, (cells, cells // 2))},
        "shapes": {"body1": _box((-h, -h), (h, h)),
                   "body2": _box((-h, y0), (h, y0 + L / 2))},
        "motion": {"builtin": "cam_follower_2d", "params": {"L": L, "cam_phase": float(np.pi / 4)}},
        "timesteps": K,
        "gammas": [round(0.1 * i, 1) for i in range(11)],
    }


def cam3d_scene(cells: int = 105, K: int = 5000) -> dict:
    """Spherical cam (hemispherical shell) and a rocking follower arm.

    The cam domain is the cube [-1, 1]^3; the follower domain extends 4/3
    as far along z. Both initial shapes are approximations chosen so that
    they collide under the motion.
    """
    eps = 2.0 / cells
    follower_cells_z = cells * 4 // 3
    shell = {"difference": [{"ball": {"center": [0.0, 0.0, 0.0], "radius": 0.95}},
                            {"ball": {"center": [0.0, 0.0, 0.0], "radius": 0.6}}]}
    cam = {"intersection": [shell, _box((-1, -1, 0), (1, 1, 1))]}
    follower = {"difference": [_box((-0.3, 0.2, 0.25), (0.3, 1.0, 2.5)),
                               {"ball": {"center": [0.0, 0.0, 0.0], "radius": 0.7}}]}
    return {
        "name": "cam3d",
        "dimension": 3,
        "domains": {"body1": _domain((-1, -1, -1), eps, (cells, cells, cells)),
                    "body2": _domain((-1, -1, 0), eps, (cells, cells, follower_cells_z))},
        "shapes": {"body1": cam, "body2": follower},
        "motion": {"builtin": "cam_follower_3d", "params": {}},
        "timesteps": K,
        "gamma": 0.5,
    }


def screw_scene(bolt_dims=(50, 50, 150), nut_dims=(100, 100, 50), cells_per_L: int = 50,
                K: int = 5000, L: float = 1.0, turns: float = 4.0) -> dict:
    """Bolt block (body 1) screwing down through a nut block (body 2).

    Both domains are centered on the z axis and start at z = 0; the initial
    shapes fill their domains.
    """
    eps = L / cells_per_L
    bw = np.asarray(bolt_dims[:2]) * eps / 2
    nw = np.asarray(nut_dims[:2]) * eps / 2
    bolt_lo, bolt_hi = (-bw[0], -bw[1], 0.0), (bw[0], bw[1], bolt_dims[2] * eps)
    nut_lo, nut_hi = (-nw[0], -nw[1], 0.0), (nw[0], nw[1], nut_dims[2] * eps)
    return {
        "name": "bolt3d",
        "dimension": 3,
        "domains": {"body1": _domain(bolt_lo, eps, bolt_dims), "body2": _domain(nut_lo, eps, nut_dims)},
        "shapes": {"body1": _box(bolt_lo, bolt_hi), "body2": _box(nut_lo, nut_hi)},
        "motion": {"builtin": "screw", "params": {"L": L, "turns": turns}},
        "timesteps": K,
        "gamma": 0.2,
        "optimizer": {"max_iters": 4000},
    }
