"""Numerics substrate: seeded random streams, gradient engines, parameter checkpoints."""

from lssdm.numerics.autodiff import ParamSet, find_nonfinite, grad_backprop, grad_fd, max_relative_error, param_set
from lssdm.numerics.checkpoint import load_params, read_manifest, save_params
from lssdm.numerics.rng import RngStream, gauss_sample

__all__ = [
    "ParamSet",
    "RngStream",
    "find_nonfinite",
    "gauss_sample",
    "grad_backprop",
    "grad_fd",
    "load_params",
    "max_relative_error",
    "param_set",
    "read_manifest",
    "save_params",
]
