"""
Leitura e escrita de checkpoints da rede

Formato: magic, versão, arquitetura em texto `chave = valor`, contagem de
floats e os tensores em float32 little-endian na ordem de declaração
(treináveis primeiro, depois as estatísticas das batch norms).
"""

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np

from config.settings import CHECKPOINT_CONFIG
from ..utils.file_handler import FileHandler
from ..utils.validators import InputError
from .spnet import NetworkSpec, SPNet, build_network

logger = logging.getLogger(__name__)

_PREFIX = struct.Struct("<8sHI")
_COUNT = struct.Struct("<Q")


def encode_checkpoint(model: SPNet) -> bytes:
    """Serializa arquitetura e pesos"""
    spec_text = model.spec.to_text().encode("utf-8")
    tensors = model.parameters() + model.buffers()
    blob = np.concatenate(
        [np.asarray(t.value, dtype="<f4").reshape(-1) for t in tensors]
    ) if tensors else np.zeros(0, dtype="<f4")

    return b"".join(
        [
            _PREFIX.pack(CHECKPOINT_CONFIG["magic"], CHECKPOINT_CONFIG["version"], len(spec_text)),
            spec_text,
            _COUNT.pack(blob.size),
            blob.tobytes(),
        ]
    )


def decode_checkpoint(data: bytes, cache_dir=None, use_cache: bool = True) -> SPNet:
    """
    Reconstrói a rede a partir do conteúdo de um checkpoint

    Raises:
        InputError: magic/versão inválidos, arquivo truncado ou contagem de
            floats incompatível com a arquitetura
    """
    try:
        magic, version, text_size = _PREFIX.unpack_from(data)
        start = _PREFIX.size
        spec_text = data[start : start + text_size].decode("utf-8")
        (count,) = _COUNT.unpack_from(data, start + text_size)
    except (struct.error, UnicodeDecodeError) as e:
        raise InputError(f"Checkpoint malformado: {e}")

    if magic != CHECKPOINT_CONFIG["magic"]:
        raise InputError("Arquivo não é um checkpoint SPNet (magic inválido)")
    if version != CHECKPOINT_CONFIG["version"]:
        raise InputError(f"Versão de checkpoint não suportada: {version}")

    offset = start + text_size + _COUNT.size
    if len(data) != offset + 4 * count:
        raise InputError("Checkpoint truncado ou com bytes extras")

    model = build_network(NetworkSpec.from_text(spec_text), cache_dir=cache_dir, use_cache=use_cache)
    tensors = model.parameters() + model.buffers()
    expected = sum(t.size for t in tensors)
    if expected != count:
        raise InputError(
            f"Checkpoint tem {count} valores, arquitetura espera {expected}"
        )

    blob = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
    cursor = 0
    for tensor in tensors:
        values = blob[cursor : cursor + tensor.size].reshape(tensor.shape)
        tensor.value[...] = values.astype(tensor.value.dtype)
        cursor += tensor.size
    return model


def save_checkpoint(model: SPNet, file_path: Union[str, Path]) -> Path:
    """
    Escreve o checkpoint de forma atômica

    Args:
        model: Rede a salvar
        file_path: Caminho de saída

    Returns:
        Caminho escrito
    """
    path = FileHandler().write_bytes_atomic(encode_checkpoint(model), file_path)
    logger.info(f"Checkpoint salvo: {path}")
    return path


def load_checkpoint(file_path: Union[str, Path], cache_dir=None, use_cache: bool = True) -> SPNet:
    """
    Carrega um checkpoint

    Args:
        file_path: Caminho do checkpoint

    Returns:
        SPNet com os pesos restaurados
    """
    handler = FileHandler()
    if not handler.validate_file_exists(file_path):
        raise InputError(f"Checkpoint não encontrado: {file_path}")
    model = decode_checkpoint(Path(file_path).read_bytes(), cache_dir, use_cache)
    logger.info(f"Checkpoint carregado: {file_path}")
    return model
