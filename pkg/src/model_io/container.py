"""
Container binário de modelos

Layout:
    b"LBADMM01"
    u32 little-endian: tamanho do cabeçalho
    cabeçalho JSON canônico (chaves ordenadas, sem espaços)
    payloads little-endian, uma camada parametrizada por vez:
        codebook:       alpha f8, códigos (int8 ou empacotados)
        int8:           escala f8, códigos int8
        full_precision: pesos f8
        seguidos do bias f8 quando a camada tem bias

A mesma sequência de bytes sempre decodifica no mesmo modelo e o
re-encode de um modelo decodificado é idêntico byte a byte.
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from network import LayerSpec, Network
from quantset import (
    FullPrecisionLayer,
    Int8Layer,
    ProjectedLayer,
    QuantizationSet,
    QuantizedLayer,
)
from tensor_core import Tensor
from .packing import pack_codes, packed_size, unpack_codes

logger = logging.getLogger(__name__)

MAGIC = b"LBADMM01"
MAGIC_FAMILY = b"LBADMM"
FORMAT_VERSION = "01"
ENCODINGS = ("int8", "packed")


class ModelFormatError(ValueError):
    """Arquivo de modelo malformado"""


class ModelVersionError(ModelFormatError):
    """Versão do container não suportada"""


class ModelLengthError(ModelFormatError):
    """Payload truncado ou com bytes sobrando"""


@dataclass(eq=False)
class QuantizedModel:
    """
    Modelo exportável: arquitetura + payload por camada parametrizada

    Biases ficam sempre em precisão plena.
    """

    layers: tuple[LayerSpec, ...]
    input_shape: tuple[int, ...]
    payloads: List[ProjectedLayer]
    biases: List[Optional[Tensor]]
    metadata: Dict[str, Any] = field(default_factory=dict)
    encoding: str = "int8"
    """Codificação dos códigos de codebook: int8 ou packed"""

    def __post_init__(self) -> None:
        self.layers = tuple(self.layers)
        self.input_shape = tuple(int(d) for d in self.input_shape)
        if self.encoding not in ENCODINGS:
            raise ValueError(f"Codificação desconhecida: {self.encoding}")
        # valida arquitetura e formas
        self.to_network()

    @classmethod
    def from_network(cls, net: Network, metadata: Optional[Dict[str, Any]] = None) -> "QuantizedModel":
        """Modelo em precisão plena (saída do pré-treino)"""
        return cls(
            net.layers,
            net.input_shape,
            [FullPrecisionLayer(w.copy()) for w in net.weights],
            [None if b is None else b.copy() for b in net.biases],
            dict(metadata or {}),
        )

    @property
    def specs(self) -> List[LayerSpec]:
        return [s for s in self.layers if s.is_parameterized]

    @property
    def names(self) -> List[str]:
        return [s.name for s in self.specs]

    def to_network(self) -> Network:
        """Rede float com pesos realizados"""
        return Network(
            self.layers, self.input_shape, [p.realize() for p in self.payloads], self.biases
        )

    def logits(self, batch: Tensor) -> Tensor:
        return self.to_network().logits(batch)

    def with_encoding(self, encoding: str) -> "QuantizedModel":
        return QuantizedModel(
            self.layers, self.input_shape, self.payloads, self.biases, self.metadata, encoding
        )

    def __repr__(self) -> str:
        kinds = ", ".join(f"{n}={_payload_name(p)}" for n, p in zip(self.names, self.payloads))
        return f"QuantizedModel({kinds})"


def _payload_name(payload: ProjectedLayer) -> str:
    if isinstance(payload, QuantizedLayer):
        return payload.qset.name
    if isinstance(payload, Int8Layer):
        return "int8"
    return "full_precision"


def _f8(values: Union[float, np.ndarray]) -> bytes:
    return np.asarray(values, dtype="<f8").tobytes()


def canonical_json(data: Dict[str, Any]) -> bytes:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode()


def encode(model: QuantizedModel, encoding: Optional[str] = None) -> bytes:
    """
    Serializa o modelo

    Args:
        model: Modelo
        encoding: int8 ou packed (None: model.encoding)

    Returns:
        Bytes do container
    """
    encoding = encoding or model.encoding
    if encoding not in ENCODINGS:
        raise ValueError(f"Codificação desconhecida: {encoding}")

    params = []
    body = bytearray()
    for spec, payload, bias in zip(model.specs, model.payloads, model.biases):
        entry: Dict[str, Any] = {
            "name": spec.name,
            "shape": list(payload.shape),
            "has_bias": bias is not None,
        }
        if isinstance(payload, QuantizedLayer):
            entry["payload"] = "codebook"
            entry["qset"] = payload.qset.to_dict()
            entry["encoding"] = encoding
            body += _f8(payload.alpha)
            if encoding == "packed":
                body += pack_codes(payload.codes, payload.qset)
            else:
                body += payload.codes.astype("<i1").tobytes()
        elif isinstance(payload, Int8Layer):
            entry["payload"] = "int8"
            body += _f8(payload.scale)
            body += payload.codes.astype("<i1").tobytes()
        else:
            entry["payload"] = "full_precision"
            body += _f8(payload.weights)
        if bias is not None:
            body += _f8(bias)
        params.append(entry)

    header = canonical_json({
        "format": MAGIC.decode(),
        "input_shape": list(model.input_shape),
        "layers": [s.to_dict() for s in model.layers],
        "params": params,
        "metadata": model.metadata,
    })
    return MAGIC + struct.pack("<I", len(header)) + header + bytes(body)


class _Reader:
    def __init__(self, raw: bytes, offset: int):
        self.raw = raw
        self.offset = offset

    def take(self, n: int, what: str) -> bytes:
        if self.offset + n > len(self.raw):
            raise ModelLengthError(
                f"Payload truncado em {what}: faltam {self.offset + n - len(self.raw)} bytes"
            )
        chunk = self.raw[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def f8(self, count: int, what: str) -> np.ndarray:
        return np.frombuffer(self.take(8 * count, what), dtype="<f8").astype(np.float64)


def decode(raw: bytes) -> QuantizedModel:
    """
    Desserializa um container

    Raises:
        ModelFormatError: Magic ou cabeçalho inválido
        ModelVersionError: Família LBADMM com outra versão
        ModelLengthError: Truncado ou com bytes sobrando
        CodebookViolationError: Código fora do alfabeto declarado
    """
    if raw[:8] != MAGIC:
        if len(raw) < 8 and MAGIC.startswith(raw):
            raise ModelLengthError(f"Arquivo com {len(raw)} bytes não contém o magic")
        if raw[:6] == MAGIC_FAMILY:
            raise ModelVersionError(
                f"Versão {raw[6:8]!r} não suportada (esperado {FORMAT_VERSION})"
            )
        raise ModelFormatError("Magic inválido: não é um modelo LBADMM")

    reader = _Reader(raw, 8)
    (header_len,) = struct.unpack("<I", reader.take(4, "tamanho do cabeçalho"))
    header_bytes = reader.take(header_len, "cabeçalho")
    try:
        header = json.loads(header_bytes.decode())
        layers = [LayerSpec.from_dict(d) for d in header["layers"]]
        input_shape = tuple(header["input_shape"])
        params = header["params"]
        metadata = header.get("metadata", {})
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise ModelFormatError(f"Cabeçalho inválido: {e}") from e

    encoding = "int8"
    payloads: List[ProjectedLayer] = []
    biases: List[Optional[Tensor]] = []
    for entry in params:
        try:
            shape = tuple(int(d) for d in entry["shape"])
            kind = entry["payload"]
            name = entry["name"]
            has_bias = bool(entry["has_bias"])
            if kind == "codebook":
                qset = QuantizationSet.from_dict(entry["qset"])
                encoding = entry.get("encoding", "int8")
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise ModelFormatError(f"Entrada de camada inválida: {entry}") from e
        count = int(np.prod(shape))

        if kind == "codebook":
            alpha = float(reader.f8(1, f"{name}.alpha")[0])
            if encoding == "packed":
                data = reader.take(packed_size(count, qset.bits_per_weight), f"{name}.codes")
                try:
                    codes = unpack_codes(data, qset, count)
                except ValueError as e:
                    if type(e) is ValueError:
                        raise ModelFormatError(f"{name}: {e}") from e
                    raise
            elif encoding == "int8":
                codes = np.frombuffer(reader.take(count, f"{name}.codes"), dtype="<i1")
            else:
                raise ModelFormatError(f"{name}: codificação desconhecida {encoding}")
            payloads.append(QuantizedLayer(codes.reshape(shape).copy(), alpha, qset))
        elif kind == "int8":
            scale = float(reader.f8(1, f"{name}.scale")[0])
            codes = np.frombuffer(reader.take(count, f"{name}.codes"), dtype="<i1")
            payloads.append(Int8Layer(codes.reshape(shape).copy(), scale))
        elif kind == "full_precision":
            payloads.append(FullPrecisionLayer(reader.f8(count, f"{name}.weights").reshape(shape)))
        else:
            raise ModelFormatError(f"{name}: payload desconhecido {kind}")

        if has_bias:
            spec = next((s for s in layers if s.name == name and s.is_parameterized), None)
            if spec is None:
                raise ModelFormatError(f"Camada {name} ausente da arquitetura")
            biases.append(reader.f8(spec.bias_shape[0], f"{name}.bias"))
        else:
            biases.append(None)

    if reader.offset != len(raw):
        raise ModelLengthError(f"{len(raw) - reader.offset} bytes sobrando após o payload")

    try:
        return QuantizedModel(layers, input_shape, payloads, biases, metadata, encoding)
    except ValueError as e:
        raise ModelFormatError(f"Modelo inconsistente: {e}") from e


def save(model: QuantizedModel, path: Union[str, Path], encoding: Optional[str] = None) -> int:
    """
    Grava o modelo

    Returns:
        Número de bytes gravados
    """
    data = encode(model, encoding)
    Path(path).write_bytes(data)
    logger.info("modelo gravado em %s (%d bytes)", path, len(data))
    return len(data)


def load(path: Union[str, Path]) -> QuantizedModel:
    """Lê um modelo do disco"""
    return decode(Path(path).read_bytes())
