"""
Métricas de segmentação: matriz de confusão, OA e mIoU
"""

from typing import Dict, List

import numpy as np

from ..utils.validators import InputError, UndefinedMetricError


class ConfusionMatrix:
    """
    Contagens C×C de (classe verdadeira, classe predita)

    Args:
        num_classes: Número de classes
    """

    def __init__(self, num_classes: int):
        self.num_classes = num_classes
        self.counts = np.zeros((num_classes, num_classes), dtype=np.int64)

    @classmethod
    def from_counts(cls, counts) -> "ConfusionMatrix":
        counts = np.asarray(counts, dtype=np.int64)
        matrix = cls(counts.shape[0])
        matrix.counts[...] = counts
        return matrix

    def update(self, truth: np.ndarray, prediction: np.ndarray) -> "ConfusionMatrix":
        truth = np.asarray(truth, dtype=np.int64)
        prediction = np.asarray(prediction, dtype=np.int64)
        if truth.shape != prediction.shape:
            raise InputError("Rótulos e predições com tamanhos diferentes")
        for values in (truth, prediction):
            if values.size and (values.min() < 0 or values.max() >= self.num_classes):
                raise InputError(f"Classe fora do intervalo [0, {self.num_classes})")
        flat = truth * self.num_classes + prediction
        self.counts += np.bincount(flat, minlength=self.num_classes**2).reshape(
            self.num_classes, self.num_classes
        )
        return self

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def class_iou(self) -> np.ndarray:
        """IoU por classe; NaN para classes ausentes da verdade e da predição"""
        tp = np.diag(self.counts).astype(np.float64)
        union = self.counts.sum(axis=0) + self.counts.sum(axis=1) - tp
        iou = np.full(self.num_classes, np.nan)
        present = union > 0
        iou[present] = tp[present] / union[present]
        return iou

    def class_accuracy(self) -> np.ndarray:
        """Acurácia por classe (recall); NaN para classes sem pontos verdadeiros"""
        tp = np.diag(self.counts).astype(np.float64)
        support = self.counts.sum(axis=1)
        accuracy = np.full(self.num_classes, np.nan)
        accuracy[support > 0] = tp[support > 0] / support[support > 0]
        return accuracy

    def summary(self, class_names: List[str] = None) -> Dict[str, object]:
        names = class_names or [str(c) for c in range(self.num_classes)]
        return {
            "classes": [
                {
                    "name": names[c],
                    "iou": float(iou),
                    "accuracy": float(acc),
                    "points": int(self.counts[c].sum()),
                }
                for c, (iou, acc) in enumerate(zip(self.class_iou(), self.class_accuracy()))
            ],
            "oa": overall_accuracy(self),
            "miou": mean_iou(self),
            "points": self.total,
        }


def overall_accuracy(cm: ConfusionMatrix) -> float:
    """Traço / total"""
    if cm.total == 0:
        raise UndefinedMetricError("OA indefinida: matriz de confusão vazia")
    return float(np.trace(cm.counts) / cm.total)


def mean_iou(cm: ConfusionMatrix) -> float:
    """Média dos IoU das classes presentes na verdade ou na predição"""
    if cm.total == 0:
        raise UndefinedMetricError("mIoU indefinido: matriz de confusão vazia")
    iou = cm.class_iou()
    present = ~np.isnan(iou)
    if not present.any():
        raise UndefinedMetricError("mIoU indefinido: todas as classes ausentes")
    return float(iou[present].mean())
