"""
Módulo para manipulação de arquivos
"""

import logging
import os
import tempfile
from pathlib import Path
from typing import Dict, List, Optional, Union

import chardet

from .validators import InputError

logger = logging.getLogger(__name__)


class FileHandler:
    """
    Classe para operações com arquivos
    """

    def __init__(self):
        """Inicializa o manipulador de arquivos"""
        self.supported_encodings = ["utf-8", "utf-8-sig", "latin-1", "cp1252"]

    def validate_file_exists(self, file_path: Union[str, Path]) -> bool:
        """
        Valida se arquivo existe

        Args:
            file_path: Caminho do arquivo

        Returns:
            True se arquivo existe
        """
        path = Path(file_path)
        return path.exists() and path.is_file()

    def detect_encoding(self, raw: bytes) -> Optional[str]:
        """
        Detecta o encoding de um conteúdo binário

        Args:
            raw: Bytes lidos do arquivo

        Returns:
            Nome do encoding ou None se a detecção falhar
        """
        guess = chardet.detect(raw)
        encoding = guess.get("encoding")
        if encoding and guess.get("confidence", 0) >= 0.5:
            return encoding.lower()
        return None

    def read_file(
        self, file_path: Union[str, Path], encoding: Optional[str] = None
    ) -> str:
        """
        Lê conteúdo de arquivo texto

        Args:
            file_path: Caminho do arquivo
            encoding: Encoding específico (detecta automaticamente se None)

        Returns:
            Conteúdo do arquivo
        """
        path = Path(file_path)

        if not self.validate_file_exists(path):
            raise InputError(f"Arquivo não encontrado: {path}")

        raw = path.read_bytes()

        # Encoding explícito, detectado e por fim a lista de fallback
        encodings_to_try = [encoding] if encoding else []
        if not encoding:
            detected = self.detect_encoding(raw)
            if detected:
                encodings_to_try.append(detected)
            encodings_to_try.extend(self.supported_encodings)

        for enc in encodings_to_try:
            try:
                return raw.decode(enc)
            except (UnicodeDecodeError, LookupError):
                continue

        raise InputError(f"Não foi possível decodificar o arquivo: {path}")

    def read_key_value_file(self, file_path: Union[str, Path]) -> Dict[str, str]:
        """
        Lê arquivo de configuração no formato `chave = valor`

        Linhas vazias e comentários iniciados por `#` são ignorados.

        Args:
            file_path: Caminho do arquivo

        Returns:
            Dict com os valores em texto, na ordem do arquivo
        """
        values: Dict[str, str] = {}
        content = self.read_file(file_path)

        for number, line in enumerate(content.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{file_path}:{number}: linha sem '=': {line!r}")

            key, value = line.split("=", 1)
            key = key.strip()
            if not key:
                raise InputError(f"{file_path}:{number}: chave vazia")
            values[key] = value.strip()

        return values

    def write_bytes_atomic(self, data: bytes, file_path: Union[str, Path]) -> Path:
        """
        Escreve bytes de forma atômica (arquivo temporário + rename)

        Args:
            data: Conteúdo binário
            file_path: Caminho final

        Returns:
            Caminho escrito
        """
        path = Path(file_path)
        path.parent.mkdir(parents=True, exist_ok=True)

        fd, temp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
        try:
            with os.fdopen(fd, "wb") as file:
                file.write(data)
                file.flush()
                os.fsync(file.fileno())
            os.replace(temp_name, path)
        except BaseException:
            if os.path.exists(temp_name):
                os.unlink(temp_name)
            raise

        logger.debug(f"Arquivo escrito: {path} ({len(data)} bytes)")
        return path

    def write_text_atomic(
        self, content: str, file_path: Union[str, Path], encoding: str = "utf-8"
    ) -> Path:
        """
        Escreve texto de forma atômica

        Args:
            content: Conteúdo a ser escrito
            file_path: Caminho do arquivo
            encoding: Encoding do arquivo

        Returns:
            Caminho escrito
        """
        return self.write_bytes_atomic(content.encode(encoding), file_path)

    def list_files(
        self, directory: Union[str, Path], pattern: str = "*", recursive: bool = False
    ) -> List[Path]:
        """
        Lista arquivos em diretório, em ordem lexicográfica

        Args:
            directory: Diretório para listar
            pattern: Padrão de arquivos (glob)
            recursive: Se deve buscar recursivamente

        Returns:
            Lista de caminhos de arquivos
        """
        dir_path = Path(directory)

        if not dir_path.exists() or not dir_path.is_dir():
            raise InputError(f"Diretório não encontrado: {directory}")

        files = dir_path.rglob(pattern) if recursive else dir_path.glob(pattern)
        return sorted(f for f in files if f.is_file())

    def create_directory(self, dir_path: Union[str, Path]) -> Path:
        """
        Cria diretório (e pais) se necessário

        Args:
            dir_path: Caminho do diretório

        Returns:
            Caminho criado
        """
        path = Path(dir_path)
        path.mkdir(parents=True, exist_ok=True)
        return path
