"""Counter-based random streams.

Every stream is a numpy ``Philox`` generator (a counter-based algorithm, so
draw sequences are fixed by the key alone) keyed through a ``SeedSequence``
built from the run seed and a spawn path. :meth:`RngStream.split` derives
children by extending the path, which keeps sibling streams disjoint and lets
parallel work partition randomness without sharing state.
"""

from collections.abc import Sequence

import numpy as np
import torch

from lssdm.domain.errors import ConfigurationError, InvalidShapeError
from lssdm.domain.models import DTYPE

_MAX_SEED = 2**64


def _check_shape(shape: Sequence[int]) -> tuple[int, ...]:
    extents = tuple(int(s) for s in shape)
    if not extents or any(s <= 0 for s in extents):
        msg = f"All extents must be positive, got {list(extents)}"
        raise InvalidShapeError(msg)
    return extents


class RngStream:
    """A deterministic random stream identified by ``(seed, path)``.

    Not shareable across threads: give each worker its own :meth:`split`.
    """

    __slots__ = ("_generator", "_path", "_seed")

    def __init__(self, seed: int, path: tuple[int, ...] = ()) -> None:
        """Initialize the stream.

        Args:
            seed: 64-bit unsigned run seed.
            path: Spawn path; the root stream has an empty path.

        """
        if not 0 <= seed < _MAX_SEED:
            msg = f"Seed must be a 64-bit unsigned integer, got {seed}"
            raise ConfigurationError(msg)
        self._seed = seed
        self._path = path
        key = np.random.SeedSequence(seed, spawn_key=path).generate_state(2, dtype=np.uint64)
        self._generator = np.random.Generator(np.random.Philox(key=key))

    @property
    def seed(self) -> int:
        """Run seed."""
        return self._seed

    @property
    def path(self) -> tuple[int, ...]:
        """Spawn path of this stream."""
        return self._path

    def split(self, index: int) -> "RngStream":
        """Return the child stream ``index``; independent of this stream's draw state."""
        return RngStream(self._seed, (*self._path, int(index)))

    def normal(self, shape: Sequence[int]) -> np.ndarray:
        """Standard normal draws as a float64 numpy array."""
        return self._generator.standard_normal(_check_shape(shape))

    def uniform(self, low: float, high: float, shape: Sequence[int]) -> np.ndarray:
        """Uniform draws on [low, high)."""
        return self._generator.uniform(low, high, _check_shape(shape))

    def bernoulli(self, p: float, shape: Sequence[int]) -> np.ndarray:
        """Boolean draws, True with probability ``p`` (``uniform < p``)."""
        return self._generator.random(_check_shape(shape)) < p

    def integers(self, low: int, high: int) -> int:
        """One integer uniform on [low, high)."""
        return int(self._generator.integers(low, high))

    def permutation(self, n: int) -> np.ndarray:
        """A uniformly random permutation of ``range(n)``."""
        return self._generator.permutation(n)

    def __repr__(self) -> str:
        """Debug representation."""
        return f"RngStream(seed={self._seed}, path={self._path})"


def gauss_sample(rng: RngStream, shape: Sequence[int]) -> torch.Tensor:
    """Draw an i.i.d. standard normal float64 tensor and advance ``rng``.

    Raises:
        InvalidShapeError: If any extent is zero or negative.

    """
    return torch.from_numpy(rng.normal(shape)).to(DTYPE)


def gauss_rows(streams: Sequence[RngStream], shape: Sequence[int]) -> torch.Tensor:
    """Stack one ``shape`` draw per stream into a ``(len(streams), *shape)`` tensor."""
    return torch.stack([gauss_sample(s, shape) for s in streams])
