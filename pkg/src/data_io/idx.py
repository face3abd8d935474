"""
Leitor do formato IDX (MNIST)

Layout big-endian:
    u8 0, u8 0, u8 tipo (0x08 = unsigned byte), u8 ndim
    ndim × u32 tamanhos
    dados brutos

Entradas gzip são detectadas pelo prefixo 0x1f 0x8b.
"""

import gzip
import struct
from pathlib import Path
from typing import Union

import numpy as np

IMAGES_MAGIC = 2051
LABELS_MAGIC = 2049
UNSIGNED_BYTE = 0x08
GZIP_PREFIX = b"\x1f\x8b"


class IdxFormatError(ValueError):
    """Cabeçalho IDX inválido"""


class IdxLengthError(IdxFormatError):
    """Arquivo truncado ou com bytes sobrando"""


def decompress_if_gzip(raw: bytes) -> bytes:
    if raw[:2] == GZIP_PREFIX:
        try:
            return gzip.decompress(raw)
        except (OSError, EOFError) as e:
            raise IdxLengthError(f"gzip corrompido: {e}") from e
    return raw


def parse_idx(raw: bytes) -> tuple[int, np.ndarray]:
    """
    Decodifica bytes IDX

    Args:
        raw: Conteúdo do arquivo (já descomprimido)

    Returns:
        Tupla (magic, array uint8 com as dimensões declaradas)

    Raises:
        IdxFormatError: Magic inválido ou tipo não suportado
        IdxLengthError: Tamanho não bate com as dimensões
    """
    if len(raw) < 4:
        raise IdxLengthError(f"Arquivo IDX com {len(raw)} bytes, cabeçalho exige 4")
    magic = struct.unpack(">I", raw[:4])[0]
    zero, dtype, ndim = raw[0:2], raw[2], raw[3]
    if zero != b"\x00\x00" or ndim == 0:
        raise IdxFormatError(f"Magic IDX inválido: {magic}")
    if dtype != UNSIGNED_BYTE:
        raise IdxFormatError(f"Tipo IDX 0x{dtype:02x} não suportado (apenas 0x08)")

    header = 4 + 4 * ndim
    if len(raw) < header:
        raise IdxLengthError(f"Cabeçalho IDX truncado: {len(raw)} < {header} bytes")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    expected = header + int(np.prod(dims, dtype=np.int64))
    if len(raw) != expected:
        raise IdxLengthError(
            f"Arquivo IDX com {len(raw)} bytes, dimensões {dims} exigem {expected}"
        )
    data = np.frombuffer(raw, dtype=np.uint8, offset=header).reshape(dims)
    return magic, data


def read_idx(path: Union[str, Path]) -> tuple[int, np.ndarray, bytes]:
    """
    Lê arquivo IDX do disco

    Returns:
        Tupla (magic, dados uint8, bytes descomprimidos)
    """
    raw = decompress_if_gzip(Path(path).read_bytes())
    magic, data = parse_idx(raw)
    return magic, data, raw
