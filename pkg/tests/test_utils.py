"""
Testes unitários para FileHandler, validadores e configurações
"""

import os
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import numpy as np

from config import settings
from config.settings import ensure_directories, get_cache_dir, get_config
from src.utils.file_handler import FileHandler
from src.utils.validators import (
    ConfigValidator,
    InputError,
    NonFiniteError,
    ParameterError,
    ShapeError,
    require_choice,
    require_finite,
    require_points,
    require_positive,
)


class TestFileHandler(unittest.TestCase):
    """Testes para a classe FileHandler"""

    def setUp(self):
        self.handler = FileHandler()
        self.temp_dir = tempfile.TemporaryDirectory()
        self.root = Path(self.temp_dir.name)

    def tearDown(self):
        self.temp_dir.cleanup()

    def test_key_value_file(self):
        """Testa leitura de arquivo chave = valor com comentários"""
        path = self.root / "treino.conf"
        path.write_text("# comentário\nepochs = 3\n\nlr0=0.01  # taxa\nbetas = 0.9, 0.99\n")

        values = self.handler.read_key_value_file(path)
        self.assertEqual(values, {"epochs": "3", "lr0": "0.01", "betas": "0.9, 0.99"})

    def test_key_value_errors(self):
        """Testa linhas inválidas"""
        path = self.root / "ruim.conf"
        path.write_text("epochs\n")
        with self.assertRaises(InputError):
            self.handler.read_key_value_file(path)

        path.write_text(" = 3\n")
        with self.assertRaises(InputError):
            self.handler.read_key_value_file(path)

    def test_read_latin1(self):
        """Testa leitura de texto fora de UTF-8"""
        path = self.root / "latin.txt"
        path.write_bytes("descrição = nuvem de pontos à esquerda\n".encode("latin-1"))
        self.assertIn("nuvem", self.handler.read_file(path))

    def test_atomic_write(self):
        """Testa escrita atômica sem temporários remanescentes"""
        path = self.handler.write_text_atomic("abc", self.root / "sub" / "saida.txt")
        self.assertEqual(path.read_text(), "abc")

        self.handler.write_bytes_atomic(b"xyz", path)
        self.assertEqual(path.read_bytes(), b"xyz")
        self.assertEqual([p.name for p in path.parent.iterdir()], ["saida.txt"])

    def test_list_files_sorted(self):
        """Testa listagem em ordem lexicográfica"""
        for name in ("b.ply", "a.ply", "c.txt"):
            (self.root / name).write_text("x")
        files = self.handler.list_files(self.root, "*.ply")
        self.assertEqual([f.name for f in files], ["a.ply", "b.ply"])

        with self.assertRaises(InputError):
            self.handler.list_files(self.root / "nada")

    def test_missing_file(self):
        """Testa leitura de arquivo inexistente"""
        self.assertFalse(self.handler.validate_file_exists(self.root / "x"))
        with self.assertRaises(InputError):
            self.handler.read_file(self.root / "x")


class TestValidators(unittest.TestCase):
    """Testes para as funções de validação"""

    def test_require_positive(self):
        """Testa escalares positivos e finitos"""
        self.assertEqual(require_positive(0.5, "r"), 0.5)
        for value in (0, -1.0, float("inf"), float("nan"), "1"):
            with self.assertRaises(ParameterError):
                require_positive(value, "r")

    def test_require_points(self):
        """Testa formato e finitude de pontos"""
        self.assertEqual(require_points([[1, 2, 3]]).dtype, np.float64)
        with self.assertRaises(ShapeError):
            require_points(np.zeros((3, 2)))
        with self.assertRaises(InputError):
            require_points([[np.inf, 0, 0]])

    def test_require_finite(self):
        """Testa nome do tensor no erro"""
        with self.assertRaises(NonFiniteError) as context:
            require_finite(np.array([1.0, np.nan]), "enc0.W1")
        self.assertEqual(context.exception.tensor, "enc0.W1")

    def test_require_choice(self):
        """Testa valores permitidos"""
        self.assertEqual(require_choice("pds", ("pds", "grid"), "sampler"), "pds")
        with self.assertRaises(ParameterError):
            require_choice("fps", ("pds", "grid"), "sampler")


class TestConfigValidator(unittest.TestCase):
    """Testes para a classe ConfigValidator"""

    def setUp(self):
        self.validator = ConfigValidator()

    def test_default_config_valid(self):
        """Testa configuração padrão"""
        self.assertTrue(self.validator.validate_train_config(get_config()))

    def test_invalid_config(self):
        """Testa acúmulo de erros"""
        config = get_config({"lr0": 0.0, "sampler": "fps", "epochs": 0})
        self.assertFalse(self.validator.validate_train_config(config))
        self.assertEqual(len(self.validator.get_last_errors()), 3)

    def test_stats(self):
        """Testa estatísticas de validação"""
        self.validator.validate_train_config(get_config())
        self.validator.validate_train_config(get_config({"betas": (0.9, 1.0)}))

        stats = self.validator.get_stats()
        self.assertEqual(stats["validations_performed"], 2)
        self.assertEqual(stats["valid_configs"], 1)
        self.assertEqual(stats["invalid_configs"], 1)

        self.validator.reset_stats()
        self.assertEqual(self.validator.get_stats()["validations_performed"], 0)


class TestSettings(unittest.TestCase):
    """Testes para config.settings"""

    def test_cache_dir_disabled(self):
        """Testa cache desabilitado com variável vazia"""
        with mock.patch.dict(os.environ, {"SPNET_CACHE_DIR": ""}):
            self.assertIsNone(get_cache_dir())
        with mock.patch.dict(os.environ, {"SPNET_CACHE_DIR": "/tmp/kernels"}):
            self.assertEqual(get_cache_dir(), Path("/tmp/kernels"))

    def test_overrides(self):
        """Testa sobrescritas sem alterar os padrões"""
        config = get_config({"epochs": 1})
        self.assertEqual(config["epochs"], 1)
        self.assertEqual(get_config()["epochs"], 30)

    def test_ensure_directories(self):
        """Testa criação apenas da saída e do cache de kernels"""
        with tempfile.TemporaryDirectory() as temp_dir:
            root = Path(temp_dir)
            with mock.patch.object(settings, "OUTPUT_DIR", root / "output"), mock.patch.dict(
                os.environ, {"SPNET_CACHE_DIR": str(root / "kernels")}
            ):
                ensure_directories()
            self.assertEqual(sorted(p.name for p in root.iterdir()), ["kernels", "output"])


if __name__ == "__main__":
    unittest.main(verbosity=2)
