"""Graph encoder, transformer/CNN decoder and conditional noise predictor."""

from lssdm.model.decoder import SensorAttentionBlock, TransformerCnnDecoder
from lssdm.model.denoiser import NoisePredictor
from lssdm.model.encoder import GraphEncoder, reparameterize
from lssdm.model.gcn import gcn_layer
from lssdm.model.lssdm import LssdmModel, build_model, init_params

__all__ = [
    "GraphEncoder",
    "LssdmModel",
    "NoisePredictor",
    "SensorAttentionBlock",
    "TransformerCnnDecoder",
    "build_model",
    "gcn_layer",
    "init_params",
    "reparameterize",
]
