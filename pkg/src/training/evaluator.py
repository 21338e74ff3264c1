"""
Avaliação de uma rede sobre um conjunto de cenas rotuladas
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from config.settings import SCENE_CONFIG
from ..data.scenes import Scene
from ..models.checkpoint import load_checkpoint
from ..models.spnet import SPNet
from ..utils.file_handler import FileHandler
from ..utils.formatters import ReportFormatter
from ..utils.validators import InputError
from .metrics import ConfusionMatrix

logger = logging.getLogger(__name__)


def class_names(num_classes: int) -> List[str]:
    """Nomes das classes sintéticas, completados com o índice"""
    names = list(SCENE_CONFIG["class_names"])
    return [names[c] if c < len(names) else f"class_{c}" for c in range(num_classes)]


def evaluate(model: SPNet, scenes: List[Scene], names: Optional[List[str]] = None) -> Dict:
    """
    IoU por classe, mIoU e OA de uma rede (modo avaliação)

    Args:
        model: Rede
        scenes: Cenas rotuladas

    Returns:
        Relatório no formato de ConfusionMatrix.summary()

    Raises:
        InputError: cena sem rótulos ou com classe além das da rede
        UndefinedMetricError: conjunto vazio
    """
    num_classes = model.spec.num_classes
    cm = ConfusionMatrix(num_classes)

    for scene in scenes:
        labels = scene.cloud.labels
        if labels is None:
            raise InputError(f"Cena sem rótulos: {scene.name}")
        if len(labels) and labels.max() >= num_classes:
            raise InputError(
                f"Checkpoint tem {num_classes} classes, cena {scene.name} "
                f"tem rótulo {int(labels.max())}"
            )
        logits = model.forward(scene.cloud, training=False)
        cm.update(labels, np.argmax(logits, axis=1))
        logger.debug(f"Cena {scene.name} avaliada ({len(labels)} pontos)")

    return cm.summary(names or class_names(num_classes))


def evaluate_checkpoint(
    checkpoint: Union[str, Path],
    scenes: List[Scene],
    report_path: Optional[Union[str, Path]] = None,
) -> Dict:
    """
    Carrega um checkpoint, avalia e opcionalmente grava o relatório TSV

    Args:
        checkpoint: Caminho do checkpoint
        scenes: Cenas rotuladas
        report_path: Caminho do TSV (None = não grava)

    Returns:
        Relatório de métricas
    """
    model = load_checkpoint(checkpoint)
    report = evaluate(model, scenes)

    if report_path is not None:
        FileHandler().write_text_atomic(ReportFormatter().metrics_tsv(report), report_path)
        logger.info(f"Relatório de avaliação salvo: {report_path}")

    logger.info(f"Avaliação: OA={report['oa']:.4f} mIoU={report['miou']:.4f}")
    return report
