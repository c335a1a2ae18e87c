from .ais import ais_log_z
from .checkpoint import load_rbm_checkpoint, save_rbm_checkpoint
from .config import AisConfig, RbmTrainConfig
from .model import (
    RbmModel,
    base_rate_biases,
    build_rbm,
    exact_log_z,
    free_energy,
    reconstruction_error,
    sample_hidden,
    sample_visible,
    test_log_prob,
)
from .training import (
    CdStatistics,
    RbmEpochMetrics,
    RbmTrainer,
    cd_gradient,
    cd_k_update,
    train_set_rbm,
)

__all__ = [
    "ais_log_z",
    "load_rbm_checkpoint",
    "save_rbm_checkpoint",
    "AisConfig",
    "RbmTrainConfig",
    "RbmModel",
    "base_rate_biases",
    "build_rbm",
    "exact_log_z",
    "free_energy",
    "reconstruction_error",
    "sample_hidden",
    "sample_visible",
    "test_log_prob",
    "CdStatistics",
    "RbmEpochMetrics",
    "RbmTrainer",
    "cd_gradient",
    "cd_k_update",
    "train_set_rbm",
]
