"""Desk-scale acceptance runs on synthetic data (minutes of CPU time)."""

import json
from pathlib import Path
from typing import Any

import pandas as pd
import pytest

from lssdm.cli.app import run

DESK_CONFIG = Path(__file__).resolve().parents[2] / "configs" / "desk.toml"

pytestmark = pytest.mark.slow


class DeskRun:
    """A synthesized and trained desk-scale run."""

    def __init__(self, root: Path) -> None:
        """Lay out the run under ``root``."""
        self.root = root
        synth = root / "synth"
        self.flags = [
            "--config",
            str(DESK_CONFIG),
            "--set",
            f"data.dataset={synth / 'dataset.csv'}",
            "--set",
            f"data.graph={synth / 'graph.json'}",
        ]
        self.checkpoint = root / "train" / "checkpoint"


@pytest.fixture(scope="module")
def desk(tmp_path_factory: pytest.TempPathFactory) -> DeskRun:
    """Return a desk run that has been synthesized and trained."""
    root = tmp_path_factory.mktemp("desk")
    assert run(["synth", "--config", str(DESK_CONFIG), "--out", str(root / "synth")]) == 0
    desk = DeskRun(root)
    assert run(["train", *desk.flags, "--out", str(root / "train")]) == 0
    return desk


@pytest.fixture(scope="module")
def report(desk: DeskRun) -> dict[str, Any]:
    """Return the eval report of the desk run."""
    out = desk.root / "eval"
    assert run(["eval", *desk.flags, "--checkpoint", str(desk.checkpoint), "--out", str(out)]) == 0
    parsed: dict[str, Any] = json.loads((out / "report.json").read_text(encoding="utf-8"))
    return parsed


class TestDeskRun:
    """Trained imputations beat the interpolation baseline."""

    def test_mae_below_interpolation(self, report: dict[str, Any]) -> None:
        """The point estimate beats interpolation."""
        assert report["mae"] < report["baseline_mae"]

    def test_crps_below_interpolation(self, report: dict[str, Any]) -> None:
        """Sample CRPS is lower than the single-sample interpolation CRPS."""
        assert report["n_samples"] == 100
        assert report["crps_mean"] < report["baseline_crps"]

    def test_latent_shift(self, desk: DeskRun) -> None:
        """Averaged latent variance moves when half the entries go missing."""
        out = desk.root / "latent"
        assert run(["latent-dump", *desk.flags, "--checkpoint", str(desk.checkpoint), "--out", str(out)]) == 0
        by_rate = pd.read_csv(out / "latent.csv").groupby("rate")["var_avg"].mean()
        assert by_rate[0.5] != by_rate[0.0]


class TestSweep:
    """Error grows with the missing rate."""

    def test_mae_non_decreasing(self, desk: DeskRun) -> None:
        """Both the model and interpolation get no better as more is hidden."""
        out = desk.root / "sweep"
        assert run(["sweep", *desk.flags, "--out", str(out)]) == 0
        frame = pd.read_csv(out / "sweep.csv").sort_values("rate")
        assert frame["baseline_mae"].is_monotonic_increasing
        assert frame["mae"].is_monotonic_increasing
