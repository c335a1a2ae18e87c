from .checkpoint import load_mlp_checkpoint, save_mlp_checkpoint
from .config import TrainConfig
from .model import MlpModel, WeightCount, build_mlp, count_weights
from .optim import VelocityState, sgd_step
from .trainer import EpochMetrics, MlpTrainer, evaluate, train_epoch

__all__ = [
    "load_mlp_checkpoint",
    "save_mlp_checkpoint",
    "TrainConfig",
    "MlpModel",
    "WeightCount",
    "build_mlp",
    "count_weights",
    "VelocityState",
    "sgd_step",
    "EpochMetrics",
    "MlpTrainer",
    "evaluate",
    "train_epoch",
]
