"""
Codebooks de baixa precisão

C_i = α_i · A, com α_i > 0 livre e alfabeto inteiro simétrico A:
- binary: {−1, +1}
- ternary: {−1, 0, +1}
- pow2:N: {0, ±1, ±2, …, ±2^N}

Códigos são armazenados como int8; por isso N ≤ 6.
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Any, Dict

import numpy as np
import numpy.typing as npt

from tensor_core import Tensor

MAX_POW2_SHIFT = 6

Codes = npt.NDArray[np.int8]


class DegenerateCodesError(ValueError):
    """Códigos todos nulos onde α precisa ser estimado"""


class CodebookViolationError(ValueError):
    """Código fora do alfabeto declarado ou escala inválida"""


class QuantKind(Enum):
    """Família do alfabeto"""
    BINARY = "binary"
    TERNARY = "ternary"
    POW2 = "pow2"


@dataclass(frozen=True)
class QuantizationSet:
    """
    Alfabeto de códigos de uma camada

    Attributes:
        kind: Família
        shift: N de pow2:N (0 nas demais famílias)
    """

    kind: QuantKind
    shift: int = 0

    def __post_init__(self) -> None:
        if self.kind == QuantKind.POW2:
            if not 0 <= self.shift <= MAX_POW2_SHIFT:
                raise ValueError(f"pow2:N exige 0 <= N <= {MAX_POW2_SHIFT}, recebeu {self.shift}")
        elif self.shift != 0:
            raise ValueError(f"{self.kind.value} não tem parâmetro de deslocamento")

    @classmethod
    def parse(cls, text: str) -> "QuantizationSet":
        """
        Interpreta "binary", "ternary" ou "pow2:N"

        Raises:
            ValueError: Para nomes desconhecidos
        """
        text = text.strip().lower()
        if text == "binary":
            return cls(QuantKind.BINARY)
        if text == "ternary":
            return cls(QuantKind.TERNARY)
        if text.startswith("pow2:"):
            try:
                shift = int(text[5:])
            except ValueError as e:
                raise ValueError(f"Codebook inválido: {text}") from e
            return cls(QuantKind.POW2, shift)
        raise ValueError(f"Codebook desconhecido: {text} (use binary, ternary ou pow2:N)")

    @property
    def name(self) -> str:
        if self.kind == QuantKind.POW2:
            return f"pow2:{self.shift}"
        return self.kind.value

    @cached_property
    def alphabet(self) -> npt.NDArray[np.int64]:
        """Alfabeto ordenado crescente"""
        if self.kind == QuantKind.BINARY:
            levels = [1]
        elif self.kind == QuantKind.TERNARY:
            levels = [0, 1]
        else:
            levels = [0] + [2**k for k in range(self.shift + 1)]
        full = sorted({s * a for a in levels for s in (-1, 1)})
        return np.array(full, dtype=np.int64)

    @cached_property
    def positive_levels(self) -> npt.NDArray[np.int64]:
        a = self.alphabet
        return a[a > 0]

    @property
    def contains_zero(self) -> bool:
        return self.kind != QuantKind.BINARY

    @property
    def bits_per_weight(self) -> int:
        """Bits por código no formato empacotado: ceil(log2 |A|)"""
        return max(1, math.ceil(math.log2(len(self.alphabet))))

    def contains(self, codes: np.ndarray) -> bool:
        """True se todos os códigos pertencem ao alfabeto"""
        return bool(np.isin(codes, self.alphabet).all())

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "shift": self.shift}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "QuantizationSet":
        return cls(QuantKind(data["kind"]), int(data.get("shift", 0)))

    def __repr__(self) -> str:
        return f"QuantizationSet({self.name}: {self.alphabet.tolist()})"


@dataclass(frozen=True, eq=False)
class QuantizedLayer:
    """
    Variável discreta G_i = α_i · Q_i

    Invariantes:
    - α > 0 e finito
    - Todo código pertence ao alfabeto
    """

    codes: Codes
    alpha: float
    qset: QuantizationSet

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise CodebookViolationError(f"α deve ser positivo e finito: {self.alpha}")
        codes = np.asarray(self.codes)
        if not np.issubdtype(codes.dtype, np.integer):
            raise CodebookViolationError(f"Códigos devem ser inteiros, recebeu {codes.dtype}")
        if not self.qset.contains(codes):
            bad = np.setdiff1d(np.unique(codes), self.qset.alphabet)
            raise CodebookViolationError(
                f"Códigos {bad.tolist()[:5]} fora do alfabeto {self.qset.name}"
            )
        object.__setattr__(self, "codes", codes.astype(np.int8))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.codes.shape

    def realize(self) -> Tensor:
        """Pesos α·Q em float64"""
        return self.alpha * self.codes.astype(np.float64)

    @property
    def zero_fraction(self) -> float:
        return float((self.codes == 0).mean()) if self.codes.size else 0.0

    def __repr__(self) -> str:
        return f"QuantizedLayer({self.qset.name}, shape={self.shape}, α={self.alpha:.6g})"


def nearest_levels(x: np.ndarray, alphabet: np.ndarray) -> npt.NDArray[np.int64]:
    """
    Nível mais próximo de cada entrada

    Empates vão para o nível de menor módulo (em x = 0 no alfabeto binário,
    para +1).

    Args:
        x: Valores reais
        alphabet: Inteiros ordenados crescentes

    Returns:
        Array de níveis com a forma de x
    """
    alphabet = np.asarray(alphabet)
    if alphabet.size == 0:
        raise ValueError("Alfabeto vazio")
    x = np.asarray(x, dtype=np.float64)
    mids = (alphabet[:-1] + alphabet[1:]) / 2.0
    idx = np.where(
        x > 0,
        np.searchsorted(mids, x, side="left"),
        np.searchsorted(mids, x, side="right"),
    )
    return alphabet[idx]


def nearest_level(x: float, alphabet: np.ndarray) -> int:
    """Versão escalar de nearest_levels"""
    return int(nearest_levels(np.array([x]), np.sort(np.asarray(alphabet)))[0])
