"""Subcommand implementations.

Every command takes a validated :class:`RunConfig`, writes into its own output
directory (echoing the merged config as ``config.json``) and never touches its
inputs. Random streams are derived from ``config.seed``: split 0 synthesizes
data, 1 initializes the model, 2 trains, 3 evaluates and 4 imputes.
"""

from dataclasses import asdict
from datetime import UTC, datetime
from pathlib import Path

import numpy as np
import pandas as pd
import structlog
import torch

from lssdm.config import RunConfig
from lssdm.data.csv_io import CsvSchema, format_value, load_csv, read_mask_file, write_csv, write_mask_file
from lssdm.data.interpolate import linear_interpolate
from lssdm.data.masking import apply_mask_file, eval_triples, simulate_missing
from lssdm.data.splits import split
from lssdm.data.synthetic import synth_generate
from lssdm.diffusion.sampler import sample_windows
from lssdm.diffusion.schedule import NoiseSchedule, build_schedule
from lssdm.domain.enums import PointEstimate
from lssdm.domain.errors import ConfigurationError
from lssdm.domain.models import Dataset, TraceRow
from lssdm.evalmetrics.evaluate import Evaluation, evaluate, write_entry_csv
from lssdm.graph.io import read_adjacency_csv, read_graph_json, write_graph_json
from lssdm.graph.laplacian import Graph, build_graph
from lssdm.model.lssdm import LssdmModel, build_model
from lssdm.numerics.checkpoint import dump_json, load_params, save_params
from lssdm.numerics.rng import RngStream
from lssdm.train.trainer import TrainResult, train, write_train_log

logger = structlog.get_logger()

SYNTH_STREAM = 0
TRAIN_STREAM = 2
EVAL_STREAM = 3
IMPUTE_STREAM = 4

LATENT_COLUMNS = ["window", "rate", "mean_avg", "var_avg"]
SWEEP_COLUMNS = ["rate", "mae", "crps_mean", "baseline_mae", "baseline_crps"]
SAMPLE_COLUMNS = ["window", "sensor", "step", "mean", "p05", "p95"]


def resolve_out_dir(config: RunConfig) -> Path:
    """Configured output directory, or ``runs/<UTC timestamp>-seed<seed>``."""
    if config.out_dir is not None:
        return config.out_dir
    stamp = datetime.now(UTC).strftime("%Y%m%dT%H%M%SZ")
    return Path("runs") / f"{stamp}-seed{config.seed}"


def prepare_out_dir(config: RunConfig) -> Path:
    """Create the output directory and write the config echo."""
    out = resolve_out_dir(config)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_bytes(dump_json(config.echo()))
    return out


def schedule_from(config: RunConfig) -> NoiseSchedule:
    """Noise schedule of the ``[diffusion]`` section."""
    d = config.diffusion
    return build_schedule(d.steps, d.beta_min, d.beta_max, d.schedule)


def _synthesize(config: RunConfig) -> tuple[Dataset, Graph]:
    s = config.synth
    return synth_generate(
        n_sensors=s.n_sensors,
        n_steps=s.n_steps,
        n_windows=s.n_windows,
        graph_degree=s.graph_degree,
        noise_sd=s.noise_sd,
        rng=RngStream(config.seed).split(SYNTH_STREAM),
        periods=s.periods,
        amplitudes=s.amplitudes,
        n_chords=s.n_chords,
    )


def load_inputs(config: RunConfig) -> tuple[Dataset, Graph]:
    """Dataset and graph from the ``[data]`` section.

    Without ``data.dataset`` the synthetic generator runs from the run seed, so
    its graph is used unless a graph file is configured. Without any graph the
    identity operator is used.
    """
    d = config.data
    if d.graph is not None and d.adjacency is not None:
        msg = "Configure either data.graph or data.adjacency, not both"
        raise ConfigurationError(msg)

    adjacency: torch.Tensor | None = None
    if d.dataset is not None:
        ds = load_csv(d.dataset, CsvSchema(window_len=d.window_len))
    else:
        ds, synth_graph = _synthesize(config)
        adjacency = synth_graph.adjacency
    if d.graph is not None:
        adjacency = read_graph_json(d.graph, ds.n_sensors)
    elif d.adjacency is not None:
        adjacency = read_adjacency_csv(d.adjacency)
    return ds, build_graph(adjacency, ds.n_sensors, config.model.laplacian)


def masked_dataset(ds: Dataset, config: RunConfig) -> Dataset:
    """Apply the fixed mask file if configured, otherwise simulate ``[mask]``."""
    if config.data.mask_file is not None:
        return apply_mask_file(ds, read_mask_file(config.data.mask_file))
    return simulate_missing(ds, config.mask)


def load_model(config: RunConfig, ds: Dataset) -> LssdmModel:
    """Model shaped by the config with the checkpoint's parameters loaded.

    Raises:
        ConfigurationError: If no checkpoint is configured.
        CheckpointError: If the checkpoint does not match the configured architecture.

    """
    if config.checkpoint is None:
        msg = "This command needs --checkpoint"
        raise ConfigurationError(msg)
    model = LssdmModel(ds.n_sensors, ds.n_steps, config.model, config.diffusion.steps)
    load_params(model, config.checkpoint, expected_architecture=model.architecture())
    model.eval()
    return model


def write_trace_csv(rows: tuple[TraceRow, ...], path: Path) -> Path:
    """Write ``t,mean_abs,std`` per reverse step."""
    frame = pd.DataFrame([asdict(r) for r in rows], columns=["t", "mean_abs", "std"])
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
    return path


def cmd_synth(config: RunConfig) -> Path:
    """Write ``dataset.csv`` and ``graph.json`` for the ``[synth]`` section."""
    out = prepare_out_dir(config)
    ds, graph = _synthesize(config)
    write_csv(ds, out / "dataset.csv")
    write_graph_json(graph, out / "graph.json", {**config.synth.model_dump(mode="json"), "seed": config.seed})
    logger.info("Synthetic data written", out=str(out), windows=len(ds))
    return out


def cmd_mask(config: RunConfig) -> Path:
    """Write the ``window,sensor,step`` triples selected by the configured mask."""
    out = prepare_out_dir(config)
    ds, _ = load_inputs(config)
    masked = masked_dataset(ds, config)
    keys = eval_triples(masked)
    write_mask_file(keys, out / "mask.csv")
    logger.info("Mask written", out=str(out), entries=len(keys))
    return out


def _train_model(config: RunConfig, masked: Dataset, graph: Graph) -> TrainResult:
    ds_train, ds_valid, _ = split(masked, config.data.split)
    model = build_model(masked.n_sensors, masked.n_steps, config.model, config.diffusion.steps, config.seed)
    return train(
        ds_train,
        ds_valid,
        graph,
        model,
        schedule_from(config),
        config.train,
        config.mask.rate,
        RngStream(config.seed).split(TRAIN_STREAM),
        workers=config.workers,
    )


def cmd_train(config: RunConfig) -> Path:
    """Mask, split and train; write ``checkpoint/`` and ``train_log.jsonl``."""
    out = prepare_out_dir(config)
    ds, graph = load_inputs(config)
    result = _train_model(config, masked_dataset(ds, config), graph)
    save_params(result.model, out / "checkpoint", result.model.architecture(), config.echo())
    write_train_log(result.history, out / "train_log.jsonl")
    logger.info("Training finished", out=str(out), epochs=len(result.history), best_epoch=result.best_epoch)
    return out


def _evaluate(config: RunConfig, model: LssdmModel, masked: Dataset, graph: Graph) -> Evaluation:
    _, _, ds_test = split(masked, config.data.split)
    return evaluate(
        model,
        ds_test,
        graph,
        schedule_from(config),
        config.eval.n_samples,
        RngStream(config.seed).split(EVAL_STREAM),
        point=config.eval.point,
        workers=config.workers,
        chunk_size=config.eval.chunk_size,
        config=config.echo(),
        trace=config.trace,
    )


def cmd_eval(config: RunConfig) -> Path:
    """Score the checkpoint on the test split; write and print ``report.json``."""
    out = prepare_out_dir(config)
    ds, graph = load_inputs(config)
    model = load_model(config, ds)
    evaluation = _evaluate(config, model, masked_dataset(ds, config), graph)
    payload = dump_json(evaluation.report.model_dump(mode="json"))
    (out / "report.json").write_bytes(payload)
    if config.eval.entry_csv:
        write_entry_csv(evaluation.entries, out / "entries.csv")
    if config.trace:
        write_trace_csv(evaluation.trace, out / "trace.csv")
    print(payload.decode("utf-8"), end="")
    return out


def _source_frame(config: RunConfig) -> pd.DataFrame:
    if config.data.dataset is None:
        msg = "impute needs data.dataset"
        raise ConfigurationError(msg)
    return pd.read_csv(config.data.dataset, dtype=str, keep_default_na=False, na_filter=False, encoding="utf-8")


def cmd_impute(config: RunConfig) -> Path:
    """Fill every empty cell of the dataset CSV.

    Cells inside a window get the denormalized sample mean (or median, by
    ``eval.point``); trailing rows past the last full window are interpolated
    along time. Observed cells are copied through as text. Writes
    ``imputed.csv``, ``samples.csv`` and ``metadata.json``.
    """
    out = prepare_out_dir(config)
    ds, graph = load_inputs(config)
    frame = _source_frame(config)
    model = load_model(config, ds)
    windows = [w for w in ds.windows if w.n_missing]
    results = sample_windows(
        windows,
        model,
        graph,
        schedule_from(config),
        config.eval.n_samples,
        RngStream(config.seed).split(IMPUTE_STREAM),
        workers=config.workers,
        chunk_size=config.eval.chunk_size,
    )

    filled = frame.copy()
    norm = ds.normalization
    n_steps = ds.n_steps
    summaries: list[dict[str, float | int]] = []
    for window, result in zip(windows, results, strict=True):
        samples = np.stack([norm.denormalize(s.numpy()) for s in result.samples])
        estimate = norm.denormalize(result.point(median=config.eval.point == PointEstimate.MEDIAN).numpy())
        p05, p95 = np.quantile(samples, [0.05, 0.95], axis=0)
        mean = samples.mean(axis=0)
        for s, t in np.argwhere(window.observed_mask.numpy() == 0):
            row = window.index * n_steps + int(t)
            filled.iat[row, 1 + int(s)] = format_value(estimate[s, t])
            summaries.append(
                {
                    "window": window.index,
                    "sensor": int(s),
                    "step": int(t),
                    "mean": float(mean[s, t]),
                    "p05": float(p05[s, t]),
                    "p95": float(p95[s, t]),
                }
            )

    sensors = list(ds.sensor_names)
    tail = slice(len(ds) * n_steps, len(frame))
    numeric = filled[sensors].replace("", np.nan).astype(float).interpolate(limit_direction="both")
    for name in sensors:
        empty = filled[name].iloc[tail] == ""
        rows = empty.index[empty]
        if len(rows):
            filled.loc[rows, name] = [format_value(v) for v in numeric.loc[rows, name]]

    filled.to_csv(out / "imputed.csv", index=False, lineterminator="\n")
    pd.DataFrame(summaries, columns=SAMPLE_COLUMNS).to_csv(
        out / "samples.csv", index=False, lineterminator="\n", float_format="%.17g"
    )
    metadata = {
        "n_samples": config.eval.n_samples,
        "n_imputed": len(summaries),
        "point": str(config.eval.point),
        "checkpoint": str(config.checkpoint),
    }
    (out / "metadata.json").write_bytes(dump_json(metadata))
    logger.info("Imputation written", out=str(out), imputed=len(summaries))
    return out


def cmd_latent_dump(config: RunConfig) -> Path:
    """Average the encoder's latent mean and variance per test window, per mask rate."""
    out = prepare_out_dir(config)
    ds, graph = load_inputs(config)
    model = load_model(config, ds)
    rows: list[dict[str, float | int]] = []
    with torch.no_grad():
        for rate in config.eval.latent_rates:
            masked = simulate_missing(ds, config.mask.model_copy(update={"rate": rate}))
            _, _, ds_test = split(masked, config.data.split)
            for window in ds_test.windows:
                latent = model.encoder(linear_interpolate(window), graph.laplacian)
                rows.append(
                    {
                        "window": window.index,
                        "rate": rate,
                        "mean_avg": float(latent.mean.mean()),
                        "var_avg": float(latent.variance.mean()),
                    }
                )
    pd.DataFrame(rows, columns=LATENT_COLUMNS).to_csv(
        out / "latent.csv", index=False, lineterminator="\n", float_format="%.17g"
    )
    logger.info("Latent moments written", out=str(out), rows=len(rows))
    return out


def cmd_sweep(config: RunConfig) -> Path:
    """Train and evaluate once per ``eval.sweep_rates`` entry; write ``sweep.csv``."""
    out = prepare_out_dir(config)
    ds, graph = load_inputs(config)
    rows: list[dict[str, float]] = []
    for rate in config.eval.sweep_rates:
        rate_config = config.model_copy(update={"mask": config.mask.model_copy(update={"rate": rate})})
        masked = simulate_missing(ds, rate_config.mask)
        model = _train_model(rate_config, masked, graph).model
        report = _evaluate(rate_config, model, masked, graph).report
        rows.append(
            {
                "rate": rate,
                "mae": report.mae,
                "crps_mean": report.crps_mean,
                "baseline_mae": report.baseline_mae,
                "baseline_crps": report.baseline_crps,
            }
        )
        logger.info("Sweep point finished", rate=rate, mae=report.mae, baseline_mae=report.baseline_mae)
    pd.DataFrame(rows, columns=SWEEP_COLUMNS).to_csv(
        out / "sweep.csv", index=False, lineterminator="\n", float_format="%.17g"
    )
    return out
