"""Co-generation of collision-free solid pairs under a prescribed relative motion.

Two design domains are voxelized, the relative motion is sampled at ``K``
instants, and sparse correlation matrices record which cells of one body
meet which cells of the other. Collision measures are then bilinear in the
two density fields, and the optimizer removes material from the initially
colliding cells of both bodies while maximizing what remains.
"""
from .analysis import contact_fraction, min_distance_series, oracle_global_measure, periodicity_score
from .collision import global_measure, local_field, partition, sensitivities, sweep, unsweep
from .correlation import CorrelationMatrix, assemble, load_matrix, restrict, save_matrix
from .errors import ConfigurationError, DimensionError, NumericalError, OracleMismatch, ValidationError
from .geometry import (Ball, Box, Cylinder, DensityField, Grid, build_grid, locate_cell, measure, rasterize,
                       threshold)
from .io import export_field, export_pgm, export_vtk, read_raw, write_raw
from .motion import Pose, PoseSeries, Trajectory, builtin_motion, keyframe_motion, sample_relative_motion
from .optimizer import OptimizerConfig, cogenerate, gamma_sweep
from .scene import SceneConfig, load_builtin_scene, parse_scene, scene_from_dict, screw_scene

__version__ = "0.1.0"

__all__ = [
    "Ball", "Box", "ConfigurationError", "CorrelationMatrix", "Cylinder", "DensityField", "DimensionError",
    "Grid", "NumericalError", "OptimizerConfig", "OracleMismatch", "Pose", "PoseSeries", "SceneConfig",
    "Trajectory", "ValidationError", "assemble", "build_grid", "builtin_motion", "cogenerate",
    "contact_fraction", "export_field", "export_pgm", "export_vtk", "gamma_sweep", "global_measure", "keyframe_motion", "load_builtin_scene",
    "load_matrix", "local_field", "locate_cell", "measure", "min_distance_series", "oracle_global_measure",
    "parse_scene", "partition", "periodicity_score", "rasterize", "read_raw", "restrict",
    "sample_relative_motion", "save_matrix", "scene_from_dict", "screw_scene", "sensitivities", "sweep", "threshold", "unsweep", "write_raw",
]
