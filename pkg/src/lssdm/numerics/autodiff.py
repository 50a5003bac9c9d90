"""Gradient engines: reverse-mode (torch autograd) and the central-difference oracle."""

import math
from collections.abc import Callable, Iterator, Mapping
from contextlib import contextmanager

import structlog
import torch
from torch import nn

from lssdm.domain.errors import NumericError, ShapeError

logger = structlog.get_logger()

ParamSet = dict[str, torch.Tensor]
"""Parameter path (dot-separated) -> tensor. ``requires_grad`` marks trainable entries."""

LossFn = Callable[[], torch.Tensor]

RELATIVE_ERROR_FLOOR = 1e-6


def param_set(module: nn.Module) -> ParamSet:
    """Return the module's parameters keyed by their dot-separated path."""
    return dict(module.named_parameters())


def _as_param_set(params: nn.Module | Mapping[str, torch.Tensor]) -> ParamSet:
    return param_set(params) if isinstance(params, nn.Module) else dict(params)


@contextmanager
def nonfinite_tracer(module: nn.Module | None) -> Iterator[list[str]]:
    """Record, in call order, the paths of submodules whose output is non-finite.

    Yields the list that forward hooks append to; the first entry is the first
    offending node of the traced computation.
    """
    offenders: list[str] = []
    if module is None:
        yield offenders
        return

    def make_hook(path: str) -> Callable[..., None]:
        def hook(_module: nn.Module, _inputs: object, output: object) -> None:
            tensors = output if isinstance(output, tuple) else (output,)
            for tensor in tensors:
                if isinstance(tensor, torch.Tensor) and not bool(torch.isfinite(tensor).all()):
                    offenders.append(path)
                    return

        return hook

    handles = [sub.register_forward_hook(make_hook(path)) for path, sub in module.named_modules() if path]
    try:
        yield offenders
    finally:
        for handle in handles:
            handle.remove()


def find_nonfinite(module: nn.Module, fn: Callable[[], object]) -> str | None:
    """Run ``fn`` and return the first submodule path with a non-finite output, if any."""
    with nonfinite_tracer(module) as offenders:
        fn()
    return offenders[0] if offenders else None


def _first_nonfinite_param(params: ParamSet) -> str | None:
    for path, tensor in params.items():
        if not bool(torch.isfinite(tensor).all()):
            return path
    return None


def grad_backprop(loss_fn: LossFn, params: nn.Module | Mapping[str, torch.Tensor]) -> ParamSet:
    """Differentiate a scalar loss with respect to every trainable parameter.

    Args:
        loss_fn: Zero-argument closure evaluating the loss from ``params``.
        params: Module or parameter map; entries with ``requires_grad=False``
            are not differentiated and get no gradient entry.

    Returns:
        Gradients keyed by parameter path, each shaped like its parameter.

    Raises:
        ShapeError: If the loss is not a scalar.
        NumericError: If the loss is non-finite; ``path`` names the first
            submodule (or parameter) that produced a non-finite value.

    """
    named = _as_param_set(params)
    with nonfinite_tracer(params if isinstance(params, nn.Module) else None) as offenders:
        loss = loss_fn()
    if loss.dim() != 0:
        msg = f"Loss must be a scalar, got shape {tuple(loss.shape)}"
        raise ShapeError(msg)
    if not bool(torch.isfinite(loss)):
        path = offenders[0] if offenders else _first_nonfinite_param(named)
        msg = f"Non-finite loss {loss.item()}"
        raise NumericError(msg, path=path or "loss")

    trainable = {path: p for path, p in named.items() if p.requires_grad}
    if not trainable:
        return {}
    if not loss.requires_grad:
        return {path: torch.zeros_like(p) for path, p in trainable.items()}
    grads = torch.autograd.grad(loss, list(trainable.values()), allow_unused=True)
    return {
        path: torch.zeros_like(p) if g is None else g.detach()
        for (path, p), g in zip(trainable.items(), grads, strict=True)
    }


def _evaluate(loss_fn: LossFn, path: str) -> float:
    value = float(loss_fn().item())
    if not math.isfinite(value):
        msg = f"Non-finite loss while probing {path}"
        raise NumericError(msg, path=path)
    return value


def grad_fd(loss_fn: LossFn, params: nn.Module | Mapping[str, torch.Tensor], step: float = 1e-5) -> ParamSet:
    """Central-difference gradient estimate ``(f(p+h) - f(p-h)) / 2h`` per scalar entry.

    ``loss_fn`` must be deterministic: freeze any random draws (noise, step
    indices) before probing. Non-smooth points (e.g. |p| at 0) give unreliable
    estimates; callers keep probes away from kinks.

    Raises:
        ValueError: If ``step`` is not positive.
        NumericError: If a probe evaluates to a non-finite value.

    """
    if step <= 0:
        msg = f"Finite-difference step must be positive, got {step}"
        raise ValueError(msg)
    named = _as_param_set(params)
    grads: ParamSet = {}
    with torch.no_grad():
        for path, param in named.items():
            if not param.requires_grad:
                continue
            flat = param.detach().view(-1)
            grad = torch.zeros_like(flat)
            for i in range(flat.numel()):
                original = flat[i].item()
                flat[i] = original + step
                plus = _evaluate(loss_fn, path)
                flat[i] = original - step
                minus = _evaluate(loss_fn, path)
                flat[i] = original
                grad[i] = (plus - minus) / (2.0 * step)
            grads[path] = grad.view_as(param)
    return grads


def max_relative_error(analytic: ParamSet, numeric: ParamSet, floor: float = RELATIVE_ERROR_FLOOR) -> float:
    """Largest ``|a - n| / max(|a|, |n|, floor)`` over all shared entries."""
    if analytic.keys() != numeric.keys():
        msg = f"Gradient sets differ: {sorted(analytic.keys() ^ numeric.keys())}"
        raise ShapeError(msg)
    worst = 0.0
    for path, a in analytic.items():
        n = numeric[path]
        if a.shape != n.shape:
            msg = f"Gradient shapes differ at {path}: {tuple(a.shape)} vs {tuple(n.shape)}"
            raise ShapeError(msg)
        if a.numel() == 0:
            continue
        scale = torch.maximum(torch.maximum(a.abs(), n.abs()), torch.full_like(a, floor))
        worst = max(worst, float(((a - n).abs() / scale).max().item()))
    return worst
