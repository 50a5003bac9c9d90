"""MAE, sample CRPS and evaluation reports."""

from lssdm.evalmetrics.evaluate import (
    EntryScore,
    Evaluation,
    EvalReport,
    build_report,
    evaluate,
    score_entries,
    write_entry_csv,
)
from lssdm.evalmetrics.metrics import crps_brute, crps_ensemble, crps_samples, mae

__all__ = [
    "EntryScore",
    "EvalReport",
    "Evaluation",
    "build_report",
    "crps_brute",
    "crps_ensemble",
    "crps_samples",
    "evaluate",
    "mae",
    "score_entries",
    "write_entry_csv",
]
