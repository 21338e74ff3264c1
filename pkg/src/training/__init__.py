"""
Módulo training - Perda, otimizador, métricas, treino e gradcheck
"""

from .losses import cross_entropy_loss
from .optimizer import Adam, AdamState, adam_step, lr_schedule
from .metrics import ConfusionMatrix, mean_iou, overall_accuracy
from .trainer import TrainConfig, Trainer, train
from .evaluator import evaluate, evaluate_checkpoint
from .gradcheck import run_gradcheck

__all__ = [
    "cross_entropy_loss",
    "Adam",
    "AdamState",
    "adam_step",
    "lr_schedule",
    "ConfusionMatrix",
    "mean_iou",
    "overall_accuracy",
    "TrainConfig",
    "Trainer",
    "train",
    "evaluate",
    "evaluate_checkpoint",
    "run_gradcheck",
]
