"""LSSDM - latent-space score-based diffusion for time-series imputation."""

__version__ = "0.1.0"
