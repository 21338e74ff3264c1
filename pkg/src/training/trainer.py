"""
Configuração e laço de treino
"""

import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Tuple, Union

import numpy as np

from config.settings import CHECKPOINT_CONFIG, DEFAULT_CONFIG
from ..data.scenes import Scene, augment, load_dataset, synthetic_dataset
from ..models.checkpoint import save_checkpoint
from ..models.spnet import NetworkSpec, SPNet, build_network, coerce_value
from ..utils.file_handler import FileHandler
from ..utils.formatters import ReportFormatter
from ..utils.validators import ConfigValidator, InputError, NonFiniteError, ParameterError
from .losses import cross_entropy_loss, inverse_frequency_weights
from .metrics import ConfusionMatrix, mean_iou, overall_accuracy
from .optimizer import Adam, lr_schedule

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """
    Configuração completa de um treino (rede, otimizador e dados)
    """

    batch_size: int = DEFAULT_CONFIG["batch_size"]
    lr0: float = DEFAULT_CONFIG["lr0"]
    betas: tuple = DEFAULT_CONFIG["betas"]
    adam_eps: float = DEFAULT_CONFIG["adam_eps"]
    lr_decay_factor: float = DEFAULT_CONFIG["lr_decay_factor"]
    decay_every: int = DEFAULT_CONFIG["decay_every"]
    epochs: int = DEFAULT_CONFIG["epochs"]
    seed: int = DEFAULT_CONFIG["seed"]
    attention_variant: str = DEFAULT_CONFIG["attention_variant"]
    sampler: str = DEFAULT_CONFIG["sampler"]

    v0: float = DEFAULT_CONFIG["v0"]
    encoder_levels: int = DEFAULT_CONFIG["encoder_levels"]
    decoder_levels: int = DEFAULT_CONFIG["decoder_levels"]
    num_classes: int = DEFAULT_CONFIG["num_classes"]
    input_channels: int = DEFAULT_CONFIG["input_channels"]
    base_channels: int = DEFAULT_CONFIG["base_channels"]
    encoder_blocks: int = DEFAULT_CONFIG["encoder_blocks"]
    decoder_blocks: int = DEFAULT_CONFIG["decoder_blocks"]
    bottleneck_ratio: float = DEFAULT_CONFIG["bottleneck_ratio"]
    batch_norm: bool = DEFAULT_CONFIG["batch_norm"]
    kernel_mode: str = DEFAULT_CONFIG["kernel_mode"]
    num_shells: int = DEFAULT_CONFIG["num_shells"]
    points_per_shell: int = DEFAULT_CONFIG["points_per_shell"]
    kernel_seed: int = DEFAULT_CONFIG["kernel_seed"]
    attention_input: str = DEFAULT_CONFIG["attention_input"]
    attention_hidden: int = DEFAULT_CONFIG["attention_hidden"]
    upsampling: str = DEFAULT_CONFIG["upsampling"]
    fp_k: int = DEFAULT_CONFIG["fp_k"]
    fp_weighting: str = DEFAULT_CONFIG["fp_weighting"]

    class_weighting: bool = DEFAULT_CONFIG["class_weighting"]
    augment_rotation: bool = DEFAULT_CONFIG["augment_rotation"]
    augment_jitter: bool = DEFAULT_CONFIG["augment_jitter"]
    jitter_sigma: float = DEFAULT_CONFIG["jitter_sigma"]

    train_data: str = DEFAULT_CONFIG["train_data"]
    test_data: str = DEFAULT_CONFIG["test_data"]
    scene_count: int = DEFAULT_CONFIG["scene_count"]
    test_scene_count: int = DEFAULT_CONFIG["test_scene_count"]
    points_per_primitive: int = DEFAULT_CONFIG["points_per_primitive"]
    scene_noise: float = DEFAULT_CONFIG["scene_noise"]

    def __post_init__(self):
        validator = ConfigValidator()
        if not validator.validate_train_config(dataclasses.asdict(self)):
            raise ParameterError(
                "Configuração de treino inválida: " + "; ".join(validator.get_last_errors())
            )

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "TrainConfig":
        """
        Constrói a configuração a partir de um dicionário

        Valores em texto são convertidos para o tipo de cada campo; chaves
        desconhecidas são rejeitadas.
        """
        known = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in values.items():
            if key not in known:
                raise ParameterError(f"Chave de configuração desconhecida: {key}")
            kwargs[key] = coerce_value(value, type(known[key].default))
        return cls(**kwargs)

    @classmethod
    def from_file(cls, file_path: Union[str, Path]) -> "TrainConfig":
        """Lê um arquivo `chave = valor`"""
        return cls.from_mapping(FileHandler().read_key_value_file(file_path))

    def network_spec(self, dtype: str = "float32") -> NetworkSpec:
        """Arquitetura correspondente a esta configuração"""
        names = {f.name for f in dataclasses.fields(NetworkSpec)}
        values = {k: v for k, v in dataclasses.asdict(self).items() if k in names}
        values["dtype"] = dtype
        return NetworkSpec(**values)

    def learning_rate(self, epoch: int) -> float:
        return lr_schedule(epoch, self.lr0, self.lr_decay_factor, self.decay_every)


def resolve_dataset(source: str, config: TrainConfig, test: bool = False) -> List[Scene]:
    """
    Conjunto de cenas de um treino ou teste

    Args:
        source: "synthetic" ou diretório com PLYs
        config: Configuração (contagens, pontos e ruído das cenas sintéticas)
        test: Usa a contagem e as sementes do conjunto de teste

    Returns:
        Lista de cenas
    """
    if source == "synthetic":
        count = config.test_scene_count if test else config.scene_count
        # Sementes de teste disjuntas das de treino
        seed = config.seed + (100000 if test else 0)
        return synthetic_dataset(count, seed, config.points_per_primitive, config.scene_noise)
    return load_dataset(source)


def check_labels(scenes: List[Scene], num_classes: int) -> None:
    """Garante rótulos presentes e dentro de [0, num_classes)"""
    for scene in scenes:
        labels = scene.cloud.labels
        if labels is None:
            raise InputError(f"Cena sem rótulos: {scene.name}")
        if len(labels) and (labels.min() < 0 or labels.max() >= num_classes):
            raise InputError(
                f"Cena {scene.name} tem rótulo {int(labels.max())}, "
                f"a rede tem {num_classes} classes"
            )


class Trainer:
    """
    Treino determinístico com checkpoints e log de métricas por época

    Args:
        config: Configuração do treino
        out_dir: Diretório de saída (checkpoint e metrics.tsv)
        dtype: Precisão dos parâmetros
        cache_dir: Diretório do cache de disposições de kernel
        use_cache: Se deve usar o cache em disco
    """

    def __init__(
        self,
        config: TrainConfig,
        out_dir: Union[str, Path],
        dtype: str = "float32",
        cache_dir=None,
        use_cache: bool = True,
    ):
        self.config = config
        self.file_handler = FileHandler()
        self.formatter = ReportFormatter()
        self.out_dir = self.file_handler.create_directory(out_dir)
        self.checkpoint_path = self.out_dir / CHECKPOINT_CONFIG["file_name"]
        self.metrics_path = self.out_dir / CHECKPOINT_CONFIG["metrics_file"]
        self.model: SPNet = build_network(
            config.network_spec(dtype), cache_dir=cache_dir, use_cache=use_cache
        )
        self.optimizer = Adam(self.model.parameters(), config.betas, config.adam_eps)
        self.history: List[Dict[str, float]] = []
        self.lr = config.lr0
        self.stats = {"epochs": 0, "steps": 0, "clouds_seen": 0}

    def _augmenting(self) -> bool:
        return self.config.augment_rotation or self.config.augment_jitter

    def _step(self, scenes, pyramids, batch, rng, class_weights) -> float:
        self.model.zero_grad()
        total = 0.0
        for i in batch:
            scene = scenes[i]
            if self._augmenting():
                cloud = augment(
                    scene.cloud,
                    rng,
                    self.config.augment_rotation,
                    self.config.augment_jitter,
                    self.config.jitter_sigma,
                )
                pyramid = self.model.prepare(cloud)
            else:
                pyramid = pyramids[i]

            logits = self.model.forward(pyramid, training=True)
            loss, grad = cross_entropy_loss(logits, scene.cloud.labels, class_weights)
            if not np.isfinite(loss):
                ids = [int(j) for j in batch]
                logger.error(f"Perda não finita no batch {ids}")
                raise NonFiniteError(f"Perda não finita no batch {ids}", batch_ids=ids)

            self.model.backward(grad)
            total += loss
            self.stats["clouds_seen"] += 1

        try:
            self.optimizer.step(self.lr, scale=1.0 / len(batch))
        except NonFiniteError as e:
            e.batch_ids = [int(j) for j in batch]
            logger.error(f"Gradiente não finito em {e.tensor}; batch {e.batch_ids}")
            raise
        self.stats["steps"] += 1
        return total

    def evaluate_pyramids(self, scenes, pyramids) -> ConfusionMatrix:
        """Passagem em modo avaliação sobre cenas já preparadas"""
        cm = ConfusionMatrix(self.config.num_classes)
        for scene, pyramid in zip(scenes, pyramids):
            logits = self.model.forward(pyramid, training=False)
            cm.update(scene.cloud.labels, np.argmax(logits, axis=1))
        return cm

    def train(self, scenes: List[Scene]) -> List[Dict[str, float]]:
        """
        Executa o treino

        Ao fim de cada época: métricas em modo avaliação sobre as cenas de
        treino, reescrita atômica de metrics.tsv e do checkpoint.

        Args:
            scenes: Cenas rotuladas

        Returns:
            Histórico por época (epoch, loss, oa, miou)
        """
        if not scenes:
            raise InputError("Conjunto de treino vazio")
        check_labels(scenes, self.config.num_classes)

        config = self.config
        rng = np.random.default_rng(config.seed)
        class_weights = None
        if config.class_weighting:
            labels = np.concatenate([s.cloud.labels for s in scenes])
            class_weights = inverse_frequency_weights(labels, config.num_classes)

        logger.info(f"Preparando {len(scenes)} cenas")
        pyramids = [self.model.prepare(scene.cloud) for scene in scenes]

        for epoch in range(config.epochs):
            self.lr = config.learning_rate(epoch)
            order = rng.permutation(len(scenes))

            loss_sum = 0.0
            for start in range(0, len(order), config.batch_size):
                batch = order[start : start + config.batch_size]
                loss_sum += self._step(scenes, pyramids, batch, rng, class_weights)

            cm = self.evaluate_pyramids(scenes, pyramids)
            row = {
                "epoch": epoch + 1,
                "loss": loss_sum / len(scenes),
                "oa": overall_accuracy(cm),
                "miou": mean_iou(cm),
            }
            self.history.append(row)
            self.stats["epochs"] += 1

            self.file_handler.write_text_atomic(
                self.formatter.history_tsv(self.history), self.metrics_path
            )
            save_checkpoint(self.model, self.checkpoint_path)
            logger.info(
                f"Época {row['epoch']}/{config.epochs}: loss={row['loss']:.4f} "
                f"OA={row['oa']:.4f} mIoU={row['miou']:.4f} lr={self.lr:.2e}"
            )

        return self.history

    def get_stats(self) -> Dict[str, int]:
        """Retorna estatísticas do treino"""
        return self.stats.copy()


def train(
    config: TrainConfig,
    scenes: List[Scene],
    out_dir: Union[str, Path],
    cache_dir=None,
    use_cache: bool = True,
) -> Tuple[SPNet, List[Dict[str, float]]]:
    """
    Treina uma rede e grava checkpoint e metrics.tsv em `out_dir`

    Returns:
        Tupla (rede treinada, histórico)
    """
    trainer = Trainer(config, out_dir, cache_dir=cache_dir, use_cache=use_cache)
    history = trainer.train(scenes)
    return trainer.model, history
