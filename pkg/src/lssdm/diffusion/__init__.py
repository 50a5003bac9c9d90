"""Noise schedule, forward corruption, reverse steps and the imputation sampler."""

from lssdm.diffusion.process import (
    Conditioning,
    forward_diffuse_marginal,
    forward_diffuse_step,
    reverse_mean,
    reverse_step,
    reverse_variance,
)
from lssdm.diffusion.sampler import sample_imputation, sample_windows
from lssdm.diffusion.schedule import NoiseSchedule, build_schedule

__all__ = [
    "Conditioning",
    "NoiseSchedule",
    "build_schedule",
    "forward_diffuse_marginal",
    "forward_diffuse_step",
    "reverse_mean",
    "reverse_step",
    "reverse_variance",
    "sample_imputation",
    "sample_windows",
]
