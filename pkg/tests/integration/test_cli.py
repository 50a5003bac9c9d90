"""End-to-end tests of the command line."""

import json
from pathlib import Path

import pandas as pd
import pytest

from lssdm.cli.app import run
from tests.integration.conftest import Pipeline

REPORT_KEYS = {
    "mae",
    "crps_mean",
    "baseline_mae",
    "baseline_crps",
    "per_sensor",
    "n_eval_points",
    "n_samples",
    "units",
    "point",
    "config",
}


def _read_text_frame(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False)


class TestSynth:
    """Tests for the synth command."""

    def test_outputs(self, pipeline: Pipeline) -> None:
        """One row per time step of every window, plus the graph and config echo."""
        frame = pd.read_csv(pipeline.dataset)
        assert len(frame) == 12 * 8
        assert list(frame.columns)[0] == "time"
        assert len(frame.columns) == 1 + 4
        assert json.loads(pipeline.graph.read_text(encoding="utf-8"))["n_nodes"] == 4
        assert json.loads((pipeline.synth_dir / "config.json").read_text(encoding="utf-8"))["seed"] == 7

    def test_same_seed_same_bytes(self, tiny_toml: Path, tmp_path: Path) -> None:
        """Synthesis is reproducible from the seed."""
        for name in ("a", "b"):
            assert run(["synth", "--config", str(tiny_toml), "--out", str(tmp_path / name)]) == 0
        assert (tmp_path / "a" / "dataset.csv").read_bytes() == (tmp_path / "b" / "dataset.csv").read_bytes()

    def test_single_sensor_rejected(self, tiny_toml: Path, tmp_path: Path) -> None:
        """A one-sensor generator spec is a data error."""
        code = run(["synth", "--config", str(tiny_toml), "--set", "synth.n_sensors=1", "--out", str(tmp_path / "x")])
        assert code == 2


class TestTrain:
    """Tests for the train command."""

    def test_outputs(self, pipeline: Pipeline) -> None:
        """A checkpoint manifest and one log line per epoch are written."""
        assert (pipeline.checkpoint / "manifest.json").exists()
        lines = (pipeline.train_dir / "train_log.jsonl").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 1

    def test_missing_dataset(self, pipeline: Pipeline, tmp_path: Path) -> None:
        """A missing dataset file exits with the data error code."""
        flags = pipeline.data_flags(dataset=tmp_path / "absent.csv")
        assert run(["train", *flags, "--out", str(tmp_path / "out")]) == 2

    def test_graph_and_adjacency_conflict(self, pipeline: Pipeline, tmp_path: Path) -> None:
        """Configuring both graph sources is a configuration error."""
        flags = [*pipeline.data_flags(), "--set", f"data.adjacency={tmp_path / 'adj.csv'}"]
        assert run(["train", *flags, "--out", str(tmp_path / "out")]) == 1


class TestEval:
    """Tests for the eval command."""

    def test_report(self, pipeline: Pipeline, tmp_path: Path) -> None:
        """The report has every key and the entry CSV has one row per evaluated entry."""
        out = tmp_path / "eval"
        code = run(["eval", *pipeline.data_flags(), "--checkpoint", str(pipeline.checkpoint), "--out", str(out)])
        assert code == 0
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert set(report) == REPORT_KEYS
        assert report["n_samples"] == 3
        assert report["units"] == "denormalized"
        assert len(pd.read_csv(out / "entries.csv")) == report["n_eval_points"]

    def test_deterministic_across_workers(self, pipeline: Pipeline, tmp_path: Path) -> None:
        """The report does not depend on the worker count."""
        reports = []
        for workers in (1, 3):
            out = tmp_path / f"w{workers}"
            flags = ["--checkpoint", str(pipeline.checkpoint), "--workers", str(workers), "--out", str(out)]
            assert run(["eval", *pipeline.data_flags(), *flags]) == 0
            report = json.loads((out / "report.json").read_text(encoding="utf-8"))
            report.pop("config")
            reports.append(report)
        assert reports[0] == reports[1]

    def test_trace(self, pipeline: Pipeline, tmp_path: Path) -> None:
        """--trace writes one row per reverse step."""
        out = tmp_path / "eval"
        flags = ["--checkpoint", str(pipeline.checkpoint), "--trace", "--out", str(out)]
        assert run(["eval", *pipeline.data_flags(), *flags]) == 0
        assert list(pd.read_csv(out / "trace.csv")["t"]) == [5, 4, 3, 2, 1]

    def test_needs_checkpoint(self, pipeline: Pipeline, tmp_path: Path) -> None:
        """Without --checkpoint eval exits with the configuration code."""
        assert run(["eval", *pipeline.data_flags(), "--out", str(tmp_path / "eval")]) == 1

    def test_architecture_mismatch(self, pipeline: Pipeline, tmp_path: Path) -> None:
        """A checkpoint loaded under another architecture is rejected."""
        flags = ["--checkpoint", str(pipeline.checkpoint), "--set", "model.latent_dim=6", "--out", str(tmp_path / "e")]
        assert run(["eval", *pipeline.data_flags(), *flags]) == 1


class TestMask:
    """Tests for the mask command and fixed mask files."""

    def test_mask_file_round_trip(self, pipeline: Pipeline, tmp_path: Path) -> None:
        """Evaluating with the written mask scores a subset of its entries."""
        mask_out = tmp_path / "mask"
        assert run(["mask", *pipeline.data_flags(), "--out", str(mask_out)]) == 0
        triples = pd.read_csv(mask_out / "mask.csv")
        assert list(triples.columns) == ["window", "sensor", "step"]

        eval_out = tmp_path / "eval"
        flags = ["--checkpoint", str(pipeline.checkpoint), "--set", f"data.mask_file={mask_out / 'mask.csv'}"]
        assert run(["eval", *pipeline.data_flags(), *flags, "--out", str(eval_out)]) == 0
        report = json.loads((eval_out / "report.json").read_text(encoding="utf-8"))
        assert 0 < report["n_eval_points"] <= len(triples)


class TestImpute:
    """Tests for the impute command."""

    @pytest.fixture
    def holed(self, pipeline: Pipeline, tmp_path: Path) -> tuple[Path, int]:
        """Return a copy of the dataset with blanks inside windows and in a trailing partial window."""
        frame = _read_text_frame(pipeline.dataset)
        holes = [(3, "s1"), (10, "s0"), (11, "s0"), (40, "s3")]
        sensors = list(frame.columns[1:])
        for row, name in holes:
            frame.loc[row, sensors[int(name[1:])]] = ""
        tail = frame.iloc[:3].copy()
        tail["time"] = [str(len(frame) + i) for i in range(3)]
        tail.iloc[1, 2] = ""
        frame = pd.concat([frame, tail], ignore_index=True)
        path = tmp_path / "holed.csv"
        frame.to_csv(path, index=False, lineterminator="\n")
        return path, len(holes)

    def test_fills_every_cell(self, pipeline: Pipeline, holed: tuple[Path, int], tmp_path: Path) -> None:
        """No empty cell remains; observed cells are copied through unchanged."""
        path, n_holes = holed
        out = tmp_path / "impute"
        flags = ["--checkpoint", str(pipeline.checkpoint), "--out", str(out)]
        assert run(["impute", *pipeline.data_flags(dataset=path), *flags]) == 0

        source = _read_text_frame(path)
        imputed = _read_text_frame(out / "imputed.csv")
        assert imputed.shape == source.shape
        assert not (imputed == "").to_numpy().any()
        observed = (source != "").to_numpy()
        assert (imputed.to_numpy()[observed] == source.to_numpy()[observed]).all()

        metadata = json.loads((out / "metadata.json").read_text(encoding="utf-8"))
        assert metadata["n_imputed"] == n_holes
        assert len(pd.read_csv(out / "samples.csv")) == n_holes

    def test_needs_dataset(self, pipeline: Pipeline, tmp_path: Path) -> None:
        """Imputation without a dataset file is a configuration error."""
        flags = ["--config", str(pipeline.config), "--checkpoint", str(pipeline.checkpoint), "--out", str(tmp_path / "i")]
        assert run(["impute", *flags]) == 1


class TestAnalysisCommands:
    """Tests for latent-dump and sweep."""

    def test_latent_dump(self, pipeline: Pipeline, tmp_path: Path) -> None:
        """One row per test window per configured rate."""
        out = tmp_path / "latent"
        assert run(["latent-dump", *pipeline.data_flags(), "--checkpoint", str(pipeline.checkpoint), "--out", str(out)]) == 0
        frame = pd.read_csv(out / "latent.csv")
        assert sorted(frame["rate"].unique()) == [0.0, 0.5]
        assert len(frame) == 2 * frame["window"].nunique()
        assert (frame["var_avg"] > 0).all()

    def test_sweep(self, pipeline: Pipeline, tmp_path: Path) -> None:
        """One row per sweep rate."""
        out = tmp_path / "sweep"
        assert run(["sweep", *pipeline.data_flags(), "--out", str(out)]) == 0
        frame = pd.read_csv(out / "sweep.csv")
        assert list(frame["rate"]) == [0.25]
        assert (frame["mae"] >= 0).all()


class TestGradcheck:
    """Tests for the gradcheck command."""

    def test_all_components_pass(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Every component is listed and passes."""
        assert run(["gradcheck"]) == 0
        out = capsys.readouterr().out
        for name in ("gcn_layer", "encoder", "decoder", "noise_predictor", "l1", "l2"):
            assert name in out

    def test_corrupted_component_fails(self) -> None:
        """A corrupted gradient exits with the numeric code."""
        assert run(["gradcheck", "--corrupt", "l2"]) == 3
