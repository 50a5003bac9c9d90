"""Tests for the transformer + CNN decoder."""

import pytest
import torch

from lssdm.domain.errors import ShapeError
from lssdm.model.decoder import SensorAttentionBlock, TransformerCnnDecoder
from lssdm.model.lssdm import init_params
from lssdm.numerics.rng import RngStream, gauss_sample


def _decoder(positional_encoding: bool = False) -> TransformerCnnDecoder:
    decoder = TransformerCnnDecoder(4, 8, 2, positional_encoding)
    init_params(decoder, RngStream(0))
    return decoder.eval()


class TestTransformerCnnDecoder:
    """Tests for TransformerCnnDecoder."""

    def test_output_shape(self) -> None:
        """(N, E) latents decode to (N, D)."""
        assert _decoder()(gauss_sample(RngStream(1), (5, 4))).shape == (5, 8)

    def test_batched_matches_single(self) -> None:
        """A batch decodes each member as if alone."""
        decoder = _decoder()
        z = gauss_sample(RngStream(1), (3, 5, 4))
        batched = decoder(z)
        assert batched.shape == (3, 5, 8)
        assert torch.allclose(batched[1], decoder(z[1]), atol=1e-12)

    def test_permutation_equivariant(self) -> None:
        """Without positional encoding, permuting sensors permutes the output."""
        decoder = _decoder()
        z = gauss_sample(RngStream(2), (5, 4))
        perm = torch.tensor([3, 0, 4, 1, 2])
        assert torch.allclose(decoder(z[perm]), decoder(z)[perm], atol=1e-12)

    def test_positional_encoding_breaks_equivariance(self) -> None:
        """With positional encoding, sensor order matters."""
        decoder = _decoder(positional_encoding=True)
        z = gauss_sample(RngStream(2), (5, 4))
        perm = torch.tensor([3, 0, 4, 1, 2])
        assert not torch.allclose(decoder(z[perm]), decoder(z)[perm])

    def test_wrong_latent_width(self) -> None:
        """Latents of the wrong width are a shape error."""
        with pytest.raises(ShapeError):
            _decoder()(torch.zeros(5, 3, dtype=torch.float64))

    def test_heads_must_divide_width(self) -> None:
        """An attention head count that does not divide E is rejected."""
        with pytest.raises(ShapeError):
            SensorAttentionBlock(5, 2)
