"""Spacelike graphs in 3-dimensional generalized Robertson-Walker spacetimes."""

from ._backend import BACKEND
from .fibermesh import FiberMesh, Metric, build_sphere, build_torus
from .graphgeom import SpacelikeGraph, make_graph, mean_curvature, shape_operator
from .warp import Affine, Constant, Cosh, Exponential, IntervalSpec, PowerLaw

__all__ = [
    "BACKEND",
    "Affine",
    "Constant",
    "Cosh",
    "Exponential",
    "FiberMesh",
    "IntervalSpec",
    "Metric",
    "PowerLaw",
    "SpacelikeGraph",
    "build_sphere",
    "build_torus",
    "make_graph",
    "mean_curvature",
    "shape_operator",
]

__version__ = "0.1.0"
