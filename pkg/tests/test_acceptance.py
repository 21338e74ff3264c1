"""
Teste de aceitação ponta a ponta nas cenas sintéticas

Treina com config/synthetic_train.conf e avalia nas cenas de teste. Demora
(30 épocas na CPU); só roda com SPNET_ACCEPTANCE=1.
"""

import os
import tempfile
import unittest
from pathlib import Path

from config.settings import PROJECT_ROOT
from src.training.evaluator import evaluate_checkpoint
from src.training.trainer import TrainConfig, Trainer, resolve_dataset

ACCEPTANCE_CONFIG = PROJECT_ROOT / "config" / "synthetic_train.conf"


@unittest.skipUnless(os.getenv("SPNET_ACCEPTANCE") == "1", "defina SPNET_ACCEPTANCE=1")
class TestSyntheticAcceptance(unittest.TestCase):
    """Testes de aceitação do treino de referência"""

    def test_reference_training_reaches_targets(self):
        """Testa OA >= 0.90 e mIoU >= 0.80 no conjunto de teste"""
        config = TrainConfig.from_file(ACCEPTANCE_CONFIG)
        self.assertLessEqual(config.epochs, 30)

        with tempfile.TemporaryDirectory() as temp_dir:
            trainer = Trainer(config, Path(temp_dir) / "aceitacao")
            trainer.train(resolve_dataset(config.train_data, config))
            report = evaluate_checkpoint(
                trainer.checkpoint_path,
                resolve_dataset(config.test_data, config, test=True),
                Path(temp_dir) / "relatorio.tsv",
            )

        self.assertGreaterEqual(report["oa"], 0.90)
        self.assertGreaterEqual(report["miou"], 0.80)


if __name__ == "__main__":
    unittest.main(verbosity=2)
