"""Parameter checkpoints: a flat little-endian f64 container plus a JSON manifest.

Layout of a checkpoint directory::

    params.bin     concatenated parameter data, row-major, '<f8'
    manifest.json  {"version", "architecture", "train_config",
                    "entries": [{"path", "shape", "offset", "dtype": "f64"}, ...]}

``offset`` counts bytes from the start of ``params.bin``. Both files are
written to a temporary name and renamed into place.
"""

import json
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np
import structlog
import torch
from torch import nn

from lssdm import __version__
from lssdm.domain.errors import CheckpointError
from lssdm.domain.models import DTYPE

logger = structlog.get_logger()

PARAMS_FILE = "params.bin"
MANIFEST_FILE = "manifest.json"
_LE_F64 = np.dtype("<f8")


def version_string() -> str:
    """Version tag recorded in manifests (``git describe`` style)."""
    return f"v{__version__}"


def _atomic_write(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        Path(tmp).replace(path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def dump_json(data: Any) -> bytes:
    """Canonical JSON bytes (sorted keys, 2-space indent, trailing newline)."""
    return (json.dumps(data, sort_keys=True, indent=2) + "\n").encode("utf-8")


def save_params(
    module: nn.Module,
    directory: Path,
    architecture: dict[str, Any],
    train_config: dict[str, Any] | None = None,
) -> Path:
    """Write every parameter of ``module`` to ``directory``.

    Returns:
        The checkpoint directory.

    """
    entries: list[dict[str, Any]] = []
    chunks: list[bytes] = []
    offset = 0
    for path, param in module.named_parameters():
        data = param.detach().cpu().numpy().astype(_LE_F64, copy=False)
        blob = np.ascontiguousarray(data).tobytes()
        entries.append({"path": path, "shape": list(param.shape), "offset": offset, "dtype": "f64"})
        chunks.append(blob)
        offset += len(blob)

    manifest = {
        "version": version_string(),
        "architecture": architecture,
        "train_config": train_config or {},
        "entries": entries,
    }
    _atomic_write(directory / PARAMS_FILE, b"".join(chunks))
    _atomic_write(directory / MANIFEST_FILE, dump_json(manifest))
    logger.info("Checkpoint written", directory=str(directory), n_params=len(entries), n_bytes=offset)
    return directory


def read_manifest(directory: Path) -> dict[str, Any]:
    """Read and minimally validate a checkpoint manifest.

    Raises:
        CheckpointError: If the manifest is missing or malformed.

    """
    try:
        manifest = json.loads((directory / MANIFEST_FILE).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        msg = f"No checkpoint manifest in {directory}"
        raise CheckpointError(msg) from e
    except json.JSONDecodeError as e:
        msg = f"Checkpoint manifest in {directory} is not valid JSON: {e}"
        raise CheckpointError(msg) from e
    for key in ("architecture", "entries"):
        if key not in manifest:
            msg = f"Checkpoint manifest lacks '{key}'"
            raise CheckpointError(msg, field=key)
    return dict(manifest)


def check_architecture(recorded: dict[str, Any], expected: dict[str, Any]) -> None:
    """Compare architecture blocks key by key.

    Raises:
        CheckpointError: Naming the first (sorted) differing field.

    """
    for key in sorted(recorded.keys() | expected.keys()):
        if recorded.get(key) != expected.get(key):
            msg = f"Checkpoint architecture mismatch on '{key}': checkpoint={recorded.get(key)!r}, config={expected.get(key)!r}"
            raise CheckpointError(msg, field=key)


def load_params(module: nn.Module, directory: Path, expected_architecture: dict[str, Any] | None = None) -> dict[str, Any]:
    """Load a checkpoint into ``module`` in place.

    Args:
        module: Module with the same parameter layout as the checkpoint.
        directory: Checkpoint directory.
        expected_architecture: When given, must match the manifest's block.

    Returns:
        The manifest.

    Raises:
        CheckpointError: On a missing file, architecture mismatch, unknown or
            missing parameter path, or shape mismatch.

    """
    manifest = read_manifest(directory)
    if expected_architecture is not None:
        check_architecture(manifest["architecture"], expected_architecture)
    try:
        blob = (directory / PARAMS_FILE).read_bytes()
    except FileNotFoundError as e:
        msg = f"No parameter container in {directory}"
        raise CheckpointError(msg) from e

    params = dict(module.named_parameters())
    seen: set[str] = set()
    for entry in manifest["entries"]:
        path, shape, offset = entry["path"], tuple(entry["shape"]), int(entry["offset"])
        if entry.get("dtype") != "f64":
            msg = f"Unsupported dtype {entry.get('dtype')!r} for {path}"
            raise CheckpointError(msg, field="dtype")
        if path not in params:
            msg = f"Checkpoint parameter '{path}' does not exist in the model"
            raise CheckpointError(msg, field=path)
        if tuple(params[path].shape) != shape:
            msg = f"Shape mismatch for '{path}': checkpoint {shape}, model {tuple(params[path].shape)}"
            raise CheckpointError(msg, field=path)
        count = int(np.prod(shape)) if shape else 1
        end = offset + count * _LE_F64.itemsize
        if end > len(blob):
            msg = f"Parameter container truncated at '{path}'"
            raise CheckpointError(msg, field=path)
        values = np.frombuffer(blob, dtype=_LE_F64, count=count, offset=offset).reshape(shape)
        with torch.no_grad():
            params[path].copy_(torch.from_numpy(values.copy()).to(DTYPE))
        seen.add(path)
    missing = sorted(params.keys() - seen)
    if missing:
        msg = f"Checkpoint lacks parameters: {missing}"
        raise CheckpointError(msg, field=missing[0])
    return manifest
