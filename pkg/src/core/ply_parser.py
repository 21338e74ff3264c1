"""
Módulo de leitura e escrita de nuvens em PLY
"""

import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from .geometry import PointCloud
from ..utils.file_handler import FileHandler
from ..utils.validators import InputError, ParameterError

logger = logging.getLogger(__name__)

# Tipos escalares do PLY (nomes clássicos e aliases com tamanho)
PLY_TYPES = {
    "char": "i1",
    "int8": "i1",
    "uchar": "u1",
    "uint8": "u1",
    "short": "i2",
    "int16": "i2",
    "ushort": "u2",
    "uint16": "u2",
    "int": "i4",
    "int32": "i4",
    "uint": "u4",
    "uint32": "u4",
    "float": "f4",
    "float32": "f4",
    "double": "f8",
    "float64": "f8",
}

FORMATS = {
    "ascii": None,
    "binary_little_endian": "<",
    "binary_big_endian": ">",
}


class PLYParser:
    """
    Classe para parsing e escrita de arquivos PLY

    Lê o elemento `vertex` com as propriedades x, y, z e, quando
    presentes, red/green/blue, nx/ny/nz e label. Propriedades desconhecidas
    são ignoradas.
    """

    def __init__(self):
        """Inicializa o parser"""
        self.file_handler = FileHandler()
        self.stats = {"files_read": 0, "files_written": 0, "parse_errors": 0}

    def _parse_header(self, data: bytes) -> Tuple[str, List[Dict], int]:
        marker = b"end_header"
        end = data.find(marker)
        if not data.startswith(b"ply") or end < 0:
            raise InputError("Arquivo PLY sem cabeçalho válido")
        body_start = data.index(b"\n", end) + 1

        text = data[:end].decode("ascii", errors="replace")
        fmt = None
        elements: List[Dict] = []

        for line in text.splitlines()[1:]:
            parts = line.split()
            if not parts or parts[0] in ("comment", "obj_info"):
                continue
            if parts[0] == "format":
                fmt = parts[1]
            elif parts[0] == "element":
                elements.append({"name": parts[1], "count": int(parts[2]), "properties": []})
            elif parts[0] == "property":
                if not elements:
                    raise InputError("Propriedade PLY fora de elemento")
                if parts[1] == "list":
                    elements[-1]["properties"].append((parts[-1], "list"))
                else:
                    if parts[1] not in PLY_TYPES:
                        raise InputError(f"Tipo PLY desconhecido: {parts[1]}")
                    elements[-1]["properties"].append((parts[2], PLY_TYPES[parts[1]]))

        if fmt not in FORMATS:
            raise InputError(f"Formato PLY não suportado: {fmt}")
        return fmt, elements, body_start

    def _read_ascii(self, body: bytes, elements: List[Dict]) -> Dict[str, np.ndarray]:
        lines = body.decode("ascii", errors="replace").splitlines()
        cursor = 0
        for element in elements:
            if element["name"] != "vertex":
                cursor += element["count"]
                continue

            names = [name for name, _ in element["properties"]]
            if any(kind == "list" for _, kind in element["properties"]):
                raise InputError("Elemento vertex com propriedade de lista")
            rows = lines[cursor : cursor + element["count"]]
            if len(rows) != element["count"]:
                raise InputError("Arquivo PLY truncado")
            table = np.array(
                [row.split()[: len(names)] for row in rows], dtype=np.float64
            ).reshape(element["count"], len(names))
            return {name: table[:, i] for i, name in enumerate(names)}

        raise InputError("Arquivo PLY sem elemento vertex")

    def _read_binary(
        self, body: bytes, elements: List[Dict], endian: str
    ) -> Dict[str, np.ndarray]:
        offset = 0
        for element in elements:
            if any(kind == "list" for _, kind in element["properties"]):
                raise InputError(
                    f"Elemento binário com propriedade de lista: {element['name']}"
                )
            dtype = np.dtype([(name, endian + kind) for name, kind in element["properties"]])

            if element["name"] != "vertex":
                offset += dtype.itemsize * element["count"]
                continue

            if len(body) < offset + dtype.itemsize * element["count"]:
                raise InputError("Arquivo PLY truncado")
            table = np.frombuffer(body, dtype=dtype, count=element["count"], offset=offset)
            return {name: table[name] for name in dtype.names}

        raise InputError("Arquivo PLY sem elemento vertex")

    def parse_bytes(self, data: bytes) -> PointCloud:
        """
        Faz parse do conteúdo de um arquivo PLY

        Args:
            data: Conteúdo binário completo

        Returns:
            PointCloud com os atributos presentes
        """
        try:
            fmt, elements, body_start = self._parse_header(data)
            body = data[body_start:]
            columns = (
                self._read_ascii(body, elements)
                if FORMATS[fmt] is None
                else self._read_binary(body, elements, FORMATS[fmt])
            )
        except (ValueError, IndexError) as e:
            self.stats["parse_errors"] += 1
            raise InputError(f"Arquivo PLY malformado: {e}")
        except InputError:
            self.stats["parse_errors"] += 1
            raise

        def stack(names):
            if not all(name in columns for name in names):
                return None
            return np.stack([np.asarray(columns[n], dtype=np.float64) for n in names], axis=1)

        positions = stack(("x", "y", "z"))
        if positions is None:
            raise InputError("Vértices PLY sem x, y, z")

        colors = stack(("red", "green", "blue"))
        if colors is not None:
            colors = colors / 255.0

        normals = stack(("nx", "ny", "nz"))
        if normals is not None:
            norms = np.linalg.norm(normals, axis=1, keepdims=True)
            normals = np.divide(normals, norms, out=normals.copy(), where=norms > 0)

        labels = None
        if "label" in columns:
            labels = np.asarray(columns["label"]).astype(np.int64)

        return PointCloud(positions=positions, colors=colors, normals=normals, labels=labels)

    def read(self, file_path: Union[str, Path]) -> PointCloud:
        """
        Lê um arquivo PLY

        Args:
            file_path: Caminho do arquivo

        Returns:
            PointCloud lida
        """
        path = Path(file_path)
        if not self.file_handler.validate_file_exists(path):
            raise InputError(f"Arquivo não encontrado: {path}")

        cloud = self.parse_bytes(path.read_bytes())
        self.stats["files_read"] += 1
        logger.debug(f"PLY lido: {path} ({len(cloud)} pontos)")
        return cloud

    def encode(
        self, cloud: PointCloud, binary: bool = True, coordinate_type: str = "float"
    ) -> bytes:
        """
        Serializa uma nuvem em PLY

        Args:
            cloud: Nuvem a serializar
            binary: binary_little_endian (True) ou ascii (False)
            coordinate_type: "float" ou "double" para coordenadas e normais

        Returns:
            Conteúdo do arquivo
        """
        if coordinate_type not in ("float", "double"):
            raise ParameterError(f"coordinate_type inválido: {coordinate_type}")
        real = PLY_TYPES[coordinate_type]

        fields = [("x", real), ("y", real), ("z", real)]
        columns = [cloud.positions[:, i] for i in range(3)]
        if cloud.colors is not None:
            rgb = np.clip(np.round(cloud.colors * 255.0), 0, 255)
            fields += [("red", "u1"), ("green", "u1"), ("blue", "u1")]
            columns += [rgb[:, i] for i in range(3)]
        if cloud.normals is not None:
            fields += [("nx", real), ("ny", real), ("nz", real)]
            columns += [cloud.normals[:, i] for i in range(3)]
        if cloud.labels is not None:
            fields += [("label", "i4")]
            columns += [cloud.labels]

        type_names = {"f4": "float", "f8": "double", "u1": "uchar", "i4": "int"}
        header = ["ply", f"format {'binary_little_endian' if binary else 'ascii'} 1.0"]
        header.append(f"element vertex {len(cloud)}")
        header += [f"property {type_names[kind]} {name}" for name, kind in fields]
        header.append("end_header")
        head = ("\n".join(header) + "\n").encode("ascii")

        table = np.empty(len(cloud), dtype=[(name, "<" + kind) for name, kind in fields])
        for (name, _), column in zip(fields, columns):
            table[name] = column

        if binary:
            return head + table.tobytes()

        lines = []
        for row in table.tolist():
            lines.append(
                " ".join(
                    repr(float(value)) if kind.startswith("f") else str(int(value))
                    for value, (_, kind) in zip(row, fields)
                )
            )
        return head + ("\n".join(lines) + ("\n" if lines else "")).encode("ascii")

    def write(
        self,
        cloud: PointCloud,
        file_path: Union[str, Path],
        binary: bool = True,
        coordinate_type: str = "float",
    ) -> Path:
        """
        Escreve uma nuvem em PLY de forma atômica

        Args:
            cloud: Nuvem a escrever
            file_path: Caminho de saída
            binary: Formato binário little-endian (True) ou ascii
            coordinate_type: "float" ou "double"

        Returns:
            Caminho escrito
        """
        path = self.file_handler.write_bytes_atomic(
            self.encode(cloud, binary, coordinate_type), file_path
        )
        self.stats["files_written"] += 1
        logger.debug(f"PLY escrito: {path} ({len(cloud)} pontos)")
        return path

    def get_stats(self) -> Dict[str, int]:
        """Retorna estatísticas de leitura/escrita"""
        return self.stats.copy()
