"""Analytic vs finite-difference gradients on tiny instances of every network and loss."""

from collections.abc import Callable, Mapping
from dataclasses import dataclass

import structlog
import torch
from torch import nn

from lssdm.config import ModelConfig
from lssdm.data.synthetic import ring_adjacency
from lssdm.diffusion.schedule import build_schedule
from lssdm.domain.enums import Activation
from lssdm.domain.errors import LssdmError
from lssdm.domain.models import DTYPE, TimeSeriesWindow
from lssdm.graph.laplacian import build_laplacian
from lssdm.model.decoder import TransformerCnnDecoder
from lssdm.model.denoiser import NoisePredictor
from lssdm.model.encoder import GraphEncoder
from lssdm.model.gcn import gcn_layer
from lssdm.model.lssdm import LssdmModel, init_params
from lssdm.numerics.autodiff import LossFn, ParamSet, grad_backprop, grad_fd, max_relative_error
from lssdm.numerics.rng import RngStream, gauss_sample
from lssdm.train.losses import WindowBatch, diffusion_noise, latent_noise, loss_diffusion, loss_vae

logger = structlog.get_logger()

TOLERANCE = 1e-3

N_SENSORS = 4
N_STEPS = 8
LATENT_DIM = 4
HIDDEN_DIM = 6
DIFFUSION_STEPS = 5

TINY_MODEL = ModelConfig(
    latent_dim=LATENT_DIM,
    hidden_dim=HIDDEN_DIM,
    n_heads=2,
    channels=4,
    n_blocks=1,
    denoiser_heads=2,
    step_embedding_dim=8,
)

COMPONENTS = ("gcn_layer", "encoder", "decoder", "noise_predictor", "l1", "l2")


@dataclass(frozen=True, slots=True)
class GradcheckRow:
    """Result of one component."""

    component: str
    n_params: int
    max_rel_error: float
    passed: bool
    error: str | None = None


Probe = tuple[Mapping[str, torch.Tensor], LossFn]


def _laplacian(rng: RngStream) -> torch.Tensor:
    adjacency = torch.from_numpy(ring_adjacency(N_SENSORS, 2, 1, rng)).to(DTYPE)
    return build_laplacian(adjacency).laplacian


def _initialized(module: nn.Module, rng: RngStream) -> nn.Module:
    init_params(module, rng, zero_final=False)
    return module.train()


def _windows(rng: RngStream) -> list[TimeSeriesWindow]:
    windows = []
    for i in range(2):
        stream = rng.split(i)
        observed = torch.from_numpy(stream.bernoulli(0.7, (N_SENSORS, N_STEPS)).astype(float)).to(DTYPE)
        values = torch.from_numpy(stream.uniform(0.0, 1.0, (N_SENSORS, N_STEPS))).to(DTYPE) * observed
        windows.append(TimeSeriesWindow(index=i, values=values, observed_mask=observed, eval_mask=torch.zeros_like(values)))
    return windows


def _gcn_probe(rng: RngStream) -> Probe:
    laplacian = _laplacian(rng.split(0))
    h = gauss_sample(rng.split(1), (N_SENSORS, HIDDEN_DIM))
    w = gauss_sample(rng.split(2), (HIDDEN_DIM, LATENT_DIM)).requires_grad_(True)
    r = gauss_sample(rng.split(3), (N_SENSORS, LATENT_DIM))
    return {"W": w}, lambda: (gcn_layer(laplacian, h, w, Activation.SIGMOID) * r).sum()


def _encoder_probe(rng: RngStream) -> Probe:
    laplacian = _laplacian(rng.split(0))
    encoder = _initialized(GraphEncoder(N_STEPS, HIDDEN_DIM, LATENT_DIM), rng.split(1))
    x = torch.from_numpy(rng.split(2).uniform(0.0, 1.0, (N_SENSORS, N_STEPS))).to(DTYPE)
    r_mean = gauss_sample(rng.split(3), (N_SENSORS, LATENT_DIM))
    r_var = gauss_sample(rng.split(4), (N_SENSORS, LATENT_DIM))

    def loss() -> torch.Tensor:
        latent = encoder(x, laplacian)
        return (latent.mean * r_mean).sum() + (latent.log_var * r_var).sum()

    return dict(encoder.named_parameters()), loss


def _decoder_probe(rng: RngStream) -> Probe:
    decoder = _initialized(TransformerCnnDecoder(LATENT_DIM, N_STEPS, TINY_MODEL.n_heads), rng.split(0))
    z = gauss_sample(rng.split(1), (N_SENSORS, LATENT_DIM))
    r = gauss_sample(rng.split(2), (N_SENSORS, N_STEPS))
    return dict(decoder.named_parameters()), lambda: (decoder(z) * r).sum()


def _noise_predictor_probe(rng: RngStream) -> Probe:
    denoiser = _initialized(
        NoisePredictor(
            DIFFUSION_STEPS,
            channels=TINY_MODEL.channels,
            n_blocks=TINY_MODEL.n_blocks,
            n_heads=TINY_MODEL.denoiser_heads,
            step_embedding_dim=TINY_MODEL.step_embedding_dim,
        ),
        rng.split(0),
    )
    window = _windows(rng.split(1))[0]
    x_t = gauss_sample(rng.split(2), (N_SENSORS, N_STEPS))
    x_bar = torch.from_numpy(rng.split(3).uniform(0.0, 1.0, (N_SENSORS, N_STEPS))).to(DTYPE)
    r = gauss_sample(rng.split(4), (N_SENSORS, N_STEPS))

    def loss() -> torch.Tensor:
        return (denoiser(x_t, window.conditional, x_bar, window.observed_mask, 3) * r).sum()

    return dict(denoiser.named_parameters()), loss


def _tiny_model(rng: RngStream) -> LssdmModel:
    model = LssdmModel(N_SENSORS, N_STEPS, TINY_MODEL, DIFFUSION_STEPS)
    init_params(model, rng, zero_final=False)
    return model.train()


def _l1_probe(rng: RngStream) -> Probe:
    laplacian = _laplacian(rng.split(0))
    model = _tiny_model(rng.split(1))
    batch = WindowBatch.from_windows(_windows(rng.split(2)))
    eps = latent_noise(batch, LATENT_DIM, rng.split(3))
    params = {path: p for path, p in model.named_parameters() if not path.startswith("denoiser.")}
    return params, lambda: loss_vae(batch, laplacian, model, eps=eps).l1


def _l2_probe(rng: RngStream) -> Probe:
    model = _tiny_model(rng.split(1))
    schedule = build_schedule(DIFFUSION_STEPS)
    batch = WindowBatch.from_windows(_windows(rng.split(2)))
    x_bar = torch.from_numpy(rng.split(3).uniform(0.0, 1.0, tuple(batch.values.shape))).to(DTYPE)
    t, eps = diffusion_noise(batch, schedule, rng.split(4))
    params = {path: p for path, p in model.named_parameters() if path.startswith("denoiser.")}
    return params, lambda: loss_diffusion(batch, x_bar, model, schedule, t=t, eps=eps)


PROBES: dict[str, Callable[[RngStream], Probe]] = {
    "gcn_layer": _gcn_probe,
    "encoder": _encoder_probe,
    "decoder": _decoder_probe,
    "noise_predictor": _noise_predictor_probe,
    "l1": _l1_probe,
    "l2": _l2_probe,
}


def _corrupt(grads: ParamSet) -> ParamSet:
    """Test hook: push the first analytic gradient entry far off."""
    path = next(iter(grads))
    bad = grads[path].clone()
    bad.view(-1)[0] += 1.0 + 10.0 * float(bad.abs().max())
    return {**grads, path: bad}


def check_component(name: str, rng: RngStream, corrupt: bool = False) -> GradcheckRow:
    """Compare both gradient engines on one component."""
    params, loss = PROBES[name](rng)
    n_params = sum(p.numel() for p in params.values())
    try:
        analytic = grad_backprop(loss, params)
        numeric = grad_fd(loss, params)
    except LssdmError as e:
        logger.warning("Gradient check errored", component=name, error=str(e))
        return GradcheckRow(name, n_params, float("nan"), passed=False, error=str(e))
    if corrupt:
        analytic = _corrupt(analytic)
    error = max_relative_error(analytic, numeric)
    return GradcheckRow(name, n_params, error, passed=error < TOLERANCE)


def run_gradcheck(seed: int = 0, corrupt: str | None = None) -> list[GradcheckRow]:
    """Check every component; component ``i`` draws from ``RngStream(seed).split(i)``."""
    if corrupt is not None and corrupt not in PROBES:
        msg = f"Unknown component {corrupt!r}; expected one of {list(PROBES)}"
        raise ValueError(msg)
    root = RngStream(seed)
    return [check_component(name, root.split(i), corrupt=name == corrupt) for i, name in enumerate(COMPONENTS)]


def format_table(rows: list[GradcheckRow]) -> str:
    """Fixed-width pass/fail table."""
    lines = [f"{'component':<16} {'params':>7} {'max_rel_err':>12}  status"]
    for row in rows:
        status = "PASS" if row.passed else ("ERROR" if row.error else "FAIL")
        lines.append(f"{row.component:<16} {row.n_params:>7} {row.max_rel_error:>12.3e}  {status}")
    return "\n".join(lines)
