"""
Política de largura de bits por camada

Cada camada restrita recebe um de três tratamentos:
- codebook: projeção em α·A (binary, ternary, pow2:N)
- int8: quantização uniforme simétrica, 255 níveis
- full_precision: identidade
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np

from tensor_core import Tensor
from .codebook import Codes, CodebookViolationError, QuantizationSet, QuantizedLayer
from .projection import DEFAULT_MAX_ITERS, iterative_quantize, ProjectionTrace

INT8_MAX = 127
INT8_GRID_ULPS = 2


class PolicyKind(Enum):
    CODEBOOK = "codebook"
    INT8 = "int8"
    FULL_PRECISION = "full_precision"


@dataclass(frozen=True)
class LayerPolicy:
    """Tratamento de uma camada"""

    kind: PolicyKind
    qset: Optional[QuantizationSet] = None

    def __post_init__(self) -> None:
        if (self.kind == PolicyKind.CODEBOOK) != (self.qset is not None):
            raise ValueError("Política codebook exige QuantizationSet (e só ela)")

    @classmethod
    def parse(cls, text: str) -> "LayerPolicy":
        """Aceita int8, full_precision ou um nome de codebook"""
        text = text.strip().lower()
        if text == "int8":
            return cls(PolicyKind.INT8)
        if text in ("full_precision", "fp", "full"):
            return cls(PolicyKind.FULL_PRECISION)
        return cls(PolicyKind.CODEBOOK, QuantizationSet.parse(text))

    @property
    def name(self) -> str:
        return self.qset.name if self.qset is not None else self.kind.value

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind.value}
        if self.qset is not None:
            data["qset"] = self.qset.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LayerPolicy":
        qset = QuantizationSet.from_dict(data["qset"]) if "qset" in data else None
        return cls(PolicyKind(data["kind"]), qset)


@dataclass(frozen=True, eq=False)
class Int8Layer:
    """Pesos s·c com c ∈ [−127, 127]"""

    codes: Codes
    scale: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise CodebookViolationError(f"Escala int8 inválida: {self.scale}")
        codes = np.asarray(self.codes)
        if codes.size and np.abs(codes.astype(np.int64)).max() > INT8_MAX:
            raise CodebookViolationError("Código int8 fora de [−127, 127]")
        object.__setattr__(self, "codes", codes.astype(np.int8))
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.codes.shape

    def realize(self) -> Tensor:
        return self.scale * self.codes.astype(np.float64)


@dataclass(frozen=True, eq=False)
class FullPrecisionLayer:
    """Pesos mantidos em float64"""

    weights: Tensor

    @property
    def shape(self) -> tuple[int, ...]:
        return self.weights.shape

    def realize(self) -> Tensor:
        return np.array(self.weights, dtype=np.float64, copy=True)


ProjectedLayer = Union[QuantizedLayer, Int8Layer, FullPrecisionLayer]


def int8_quantize(w: Tensor) -> Int8Layer:
    """
    Quantização simétrica: s = max|W|/127, c = round(W/s)

    Arredondamento com meio para longe de zero; s = 1 para W nulo. W já
    na grade s'·c (s' a até 2 ulps de max|W|/127) volta com s' e c, de
    modo que requantizar reproduz W bit a bit.
    """
    w = np.asarray(w, dtype=np.float64)
    peak = float(np.abs(w).max()) if w.size else 0.0
    if peak == 0:
        return Int8Layer(np.zeros(w.shape, dtype=np.int8), 1.0)

    scale = peak / INT8_MAX
    candidates = [scale]
    for direction in (0.0, np.inf):
        s = scale
        for _ in range(INT8_GRID_ULPS):
            s = float(np.nextafter(s, direction))
            candidates.append(s)
    for s in candidates:
        codes = _int8_codes(w, s)
        if np.array_equal(s * codes.astype(np.float64), w):
            return Int8Layer(codes, s)
    return Int8Layer(_int8_codes(w, scale), scale)


def _int8_codes(w: Tensor, scale: float) -> Codes:
    codes = np.sign(w) * np.floor(np.abs(w) / scale + 0.5)
    return np.clip(codes, -INT8_MAX, INT8_MAX).astype(np.int8)


def layer_scale(layer: ProjectedLayer) -> Optional[float]:
    """α de codebook, escala de int8, None para precisão plena"""
    if isinstance(layer, QuantizedLayer):
        return layer.alpha
    if isinstance(layer, Int8Layer):
        return layer.scale
    return None


def apply_layer_policy_traced(
    w: Tensor,
    policy: LayerPolicy,
    init_alpha: Optional[float] = None,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> tuple[ProjectedLayer, Optional[ProjectionTrace]]:
    """apply_layer_policy devolvendo também o traço da projeção de codebook"""
    if policy.kind == PolicyKind.CODEBOOK:
        trace = iterative_quantize(w, policy.qset, init_alpha, max_iters)
        return trace.layer, trace
    if policy.kind == PolicyKind.INT8:
        return int8_quantize(w), None
    return FullPrecisionLayer(np.array(w, dtype=np.float64, copy=True)), None


def apply_layer_policy(
    w: Tensor,
    policy: LayerPolicy,
    init_alpha: Optional[float] = None,
) -> ProjectedLayer:
    """
    Aplica o tratamento da camada

    Args:
        w: Pesos (ou W + λ)
        policy: Tratamento
        init_alpha: Warm start da projeção de codebook

    Returns:
        QuantizedLayer, Int8Layer ou FullPrecisionLayer
    """
    return apply_layer_policy_traced(w, policy, init_alpha)[0]


def project_state(
    tensors: Sequence[Tensor],
    policies: Sequence[Union[LayerPolicy, QuantizationSet]],
    init_alphas: Optional[Sequence[Optional[float]]] = None,
) -> list[ProjectedLayer]:
    """
    Projeta cada camada de forma independente

    Args:
        tensors: V_i por camada
        policies: Política (ou QuantizationSet) por camada
        init_alphas: Warm starts por camada

    Returns:
        Camadas projetadas, na mesma ordem
    """
    if len(tensors) != len(policies):
        raise ValueError(f"{len(tensors)} tensores para {len(policies)} políticas")
    if init_alphas is None:
        init_alphas = [None] * len(tensors)
    out = []
    for v, policy, alpha in zip(tensors, policies, init_alphas):
        if isinstance(policy, QuantizationSet):
            policy = LayerPolicy(PolicyKind.CODEBOOK, policy)
        out.append(apply_layer_policy(v, policy, alpha))
    return out
