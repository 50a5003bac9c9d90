"""Dataset ingestion, missing-value bookkeeping, coarse fill, splits and synthetic data."""

from lssdm.data.csv_io import CsvSchema, load_csv, read_mask_file, write_csv, write_mask_file
from lssdm.data.interpolate import interpolate_batch, interpolation_baseline, linear_interpolate
from lssdm.data.masking import apply_mask_file, eval_triples, simulate_missing
from lssdm.data.splits import split, split_sizes
from lssdm.data.synthetic import synth_generate

__all__ = [
    "CsvSchema",
    "apply_mask_file",
    "eval_triples",
    "interpolate_batch",
    "interpolation_baseline",
    "linear_interpolate",
    "load_csv",
    "read_mask_file",
    "simulate_missing",
    "split",
    "split_sizes",
    "synth_generate",
    "write_csv",
    "write_mask_file",
]
