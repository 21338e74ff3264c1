"""
Função de perda da segmentação
"""

from typing import Optional, Tuple

import numpy as np
from scipy.special import log_softmax

from ..utils.validators import InputError, ShapeError


def inverse_frequency_weights(labels: np.ndarray, num_classes: int) -> np.ndarray:
    """
    Pesos por classe proporcionais ao inverso da frequência

    Classes ausentes recebem peso 0; os pesos das presentes têm média 1.
    """
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=num_classes)
    weights = np.zeros(num_classes, dtype=np.float64)
    present = counts > 0
    weights[present] = 1.0 / counts[present]
    weights[present] *= present.sum() / weights[present].sum()
    return weights


def cross_entropy_loss(
    logits: np.ndarray, labels: np.ndarray, class_weights: Optional[np.ndarray] = None
) -> Tuple[float, np.ndarray]:
    """
    Entropia cruzada softmax média por ponto

    Args:
        logits: (N, C)
        labels: (N,) com valores em [0, C)
        class_weights: Peso por classe (None = todos 1)

    Returns:
        Tupla (perda, gradiente dos logits (softmax − onehot)·peso/N)
    """
    logits = np.asarray(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or len(labels) != len(logits):
        raise ShapeError(f"logits {logits.shape} incompatível com {len(labels)} rótulos")

    count, num_classes = logits.shape
    if count == 0:
        raise InputError("Nenhum ponto para calcular a perda")
    if labels.min() < 0 or labels.max() >= num_classes:
        raise InputError(
            f"Rótulo fora do intervalo [0, {num_classes}): "
            f"{int(labels.min())}..{int(labels.max())}"
        )

    log_probs = log_softmax(logits.astype(np.float64), axis=1)
    rows = np.arange(count)
    weights = np.ones(count) if class_weights is None else np.asarray(class_weights)[labels]

    loss = float(-np.sum(weights * log_probs[rows, labels]) / count)

    grad = np.exp(log_probs)
    grad[rows, labels] -= 1.0
    grad *= weights[:, None] / count
    return loss, grad.astype(logits.dtype)
