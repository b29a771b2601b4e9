"""Deep Potential inference with a tabulated, fused embedding net."""

from .compress import compress_model
from .evaluate import compute_energy_forces_virial
from .neighbor import build_neighbor_list
from .networks import DPModel, EmbeddingNet, FittingNet
from .presets import gen_model
from .structure import AtomicConfig, gen_config

__version__ = "0.1.0"

__all__ = [
    "AtomicConfig", "DPModel", "EmbeddingNet", "FittingNet", "build_neighbor_list",
    "compress_model", "compute_energy_forces_virial", "gen_config", "gen_model",
]
