"""
Projeção euclidiana em α·A por quantização iterativa

Resolve min_{α>0, Q∈A^d} ‖V − α·Q‖² alternando:
- α ← VᵀQ / QᵀQ (mínimos quadrados com Q fixo)
- Q ← nearest_levels(V / α) (ponto mais próximo com α fixo)

Cada meia-etapa não aumenta o objetivo; a alternação para quando os
códigos não mudam (igualdade exata de inteiros).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from tensor_core import Tensor
from .codebook import DegenerateCodesError, QuantizationSet, QuantizedLayer, nearest_levels

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERS = 20
MAX_HALVINGS = 40
BINARY_ALPHA_FLOOR = 1e-12
FULL_ANCHOR_LIMIT = 64
ANCHOR_QUANTILES = (0.01, 0.10, 0.25, 0.50)


@dataclass
class ProjectionTrace:
    """Resultado da projeção com o histórico da alternação escolhida"""

    layer: QuantizedLayer
    objectives: List[float] = field(default_factory=list)
    """‖V − αQ‖² após cada alternação (o primeiro valor é o do ponto inicial)"""

    iterations: int = 0
    """Alternações executadas, incluindo a que confirma a fixação dos códigos"""

    converged: bool = True
    starts: int = 1

    @property
    def objective(self) -> float:
        return self.objectives[-1]


def projection_objective(v: np.ndarray, alpha: float, codes: np.ndarray) -> float:
    """‖V − α·Q‖²"""
    r = v - alpha * codes
    return float(np.dot(r.ravel(), r.ravel()))


def alpha_update(v: Tensor, codes: np.ndarray) -> float:
    """
    Escala ótima com códigos fixos: α = VᵀQ / QᵀQ

    Raises:
        DegenerateCodesError: Se Q for todo nulo ou α resultante não positivo
    """
    q = np.asarray(codes, dtype=np.float64).ravel()
    qq = float(np.dot(q, q))
    if qq == 0.0:
        raise DegenerateCodesError("Códigos todos nulos: α indefinido")
    alpha = float(np.dot(np.asarray(v, dtype=np.float64).ravel(), q)) / qq
    if not alpha > 0:
        raise DegenerateCodesError(f"α não positivo ({alpha}) para os códigos dados")
    return alpha


def default_alpha(v: np.ndarray) -> float:
    """
    Escala robusta: média de |V| nas entradas acima da mediana de |V|

    Devolve 0.0 somente para V todo nulo.
    """
    mag = np.abs(v.ravel())
    upper = mag[mag >= np.median(mag)]
    alpha = float(upper.mean()) if upper.size else 0.0
    if alpha == 0.0:
        alpha = float(mag.mean())
    return alpha


def _anchor_alphas(v: np.ndarray, qset: QuantizationSet) -> list[float]:
    mag = np.sort(np.abs(v.ravel()))[::-1]
    d = mag.size
    if d <= FULL_ANCHOR_LIMIT:
        anchors = mag
    else:
        ranks = [0, 1, 2, 3] + [int(q * d) for q in ANCHOR_QUANTILES]
        anchors = mag[sorted(set(min(r, d - 1) for r in ranks))]
    alphas = []
    for anchor in anchors:
        if anchor <= 0:
            continue
        for level in qset.positive_levels:
            alphas.append(float(anchor) / float(level))
    return alphas


def _support_candidates(v: np.ndarray) -> list[tuple[float, np.ndarray]]:
    """
    Suportes top-k: códigos sign(V) nas k maiores |V|, zero no resto

    Com o suporte fixo, α = média das k maiores |V| e o objetivo vale
    ‖V‖² − k·α². O melhor k é o ótimo global no alfabeto ternário.
    Para d pequeno devolve todos os k; acima disso, apenas o melhor.
    """
    flat = v.ravel()
    order = np.argsort(-np.abs(flat), kind="stable")
    mag = np.abs(flat)[order]
    k_max = int(np.count_nonzero(mag))
    if k_max == 0:
        return []
    ks = np.arange(1, k_max + 1)
    sums = np.cumsum(mag[:k_max])
    if flat.size <= FULL_ANCHOR_LIMIT:
        chosen = ks
    else:
        chosen = [int(ks[np.argmax(sums * sums / ks)])]

    signs = np.where(flat > 0, 1, -1).astype(np.int64)
    candidates = []
    for k in chosen:
        codes = np.zeros(flat.size, dtype=np.int64)
        idx = order[:k]
        codes[idx] = signs[idx]
        candidates.append((float(sums[k - 1]) / k, codes))
    return candidates


def _initial_codes(v: np.ndarray, alpha: float, qset: QuantizationSet) -> tuple[float, np.ndarray]:
    codes = nearest_levels(v / alpha, qset.alphabet)
    halvings = 0
    while not codes.any():
        if halvings == MAX_HALVINGS:
            raise DegenerateCodesError(
                f"Códigos nulos após {MAX_HALVINGS} reduções de α (α={alpha:.3g})"
            )
        alpha /= 2.0
        halvings += 1
        codes = nearest_levels(v / alpha, qset.alphabet)
    return alpha, codes


def _alternate(
    v: np.ndarray,
    qset: QuantizationSet,
    alpha: float,
    max_iters: int,
    codes: Optional[np.ndarray] = None,
) -> tuple[float, np.ndarray, list[float], int, bool]:
    if codes is None:
        alpha, codes = _initial_codes(v, alpha, qset)
    objectives = [projection_objective(v, alpha, codes)]
    for it in range(1, max_iters + 1):
        alpha = alpha_update(v, codes)
        new_codes = nearest_levels(v / alpha, qset.alphabet)
        if not new_codes.any():
            raise DegenerateCodesError("Alternação produziu códigos todos nulos")
        objectives.append(projection_objective(v, alpha, new_codes))
        logger.debug("alternação %d: α=%.6g objetivo=%.6g", it, alpha, objectives[-1])
        if np.array_equal(new_codes, codes):
            return alpha, codes, objectives, it, True
        codes = new_codes

    alpha = alpha_update(v, codes)
    objectives.append(projection_objective(v, alpha, codes))
    return alpha, codes, objectives, max_iters, False


def iterative_quantize(
    v: Tensor,
    qset: QuantizationSet,
    init_alpha: Optional[float] = None,
    max_iters: int = DEFAULT_MAX_ITERS,
    learn_alpha: bool = True,
) -> ProjectionTrace:
    """
    Projeta V em α·A

    Sem init_alpha, roda a alternação a partir da escala robusta e de
    escalas ancoradas |v_j|/a e, em alfabetos com zero, dos suportes
    top-k, mantendo o menor objetivo (primeiro em empates). Com
    init_alpha, uma única alternação (warm start).

    Args:
        v: Tensor a projetar (V = W + λ)
        qset: Alfabeto da camada
        init_alpha: Escala inicial (obrigatória com learn_alpha=False)
        max_iters: Limite de alternações
        learn_alpha: False mantém α fixo e só arredonda os códigos

    Returns:
        ProjectionTrace com o QuantizedLayer resultante

    Raises:
        ValueError: V vazio ou não finito
        DegenerateCodesError: Códigos nulos irrecuperáveis
    """
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        raise ValueError("Tensor vazio não pode ser projetado")
    if not np.isfinite(v).all():
        raise ValueError("Tensor com valores não finitos")
    if max_iters < 1:
        raise ValueError(f"max_iters deve ser >= 1: {max_iters}")
    if init_alpha is not None and not (math.isfinite(init_alpha) and init_alpha > 0):
        raise ValueError(f"init_alpha deve ser positivo: {init_alpha}")

    if not learn_alpha:
        if init_alpha is None:
            raise ValueError("learn_alpha=False exige init_alpha")
        codes = nearest_levels(v / init_alpha, qset.alphabet)
        layer = QuantizedLayer(codes, init_alpha, qset)
        return ProjectionTrace(layer, [projection_objective(v, init_alpha, codes)], 1, True)

    if not v.any():
        if qset.contains_zero:
            codes = np.zeros(v.shape, dtype=np.int8)
            alpha = init_alpha if init_alpha is not None else 1.0
        else:
            codes = np.ones(v.shape, dtype=np.int8)
            alpha = BINARY_ALPHA_FLOOR
        return ProjectionTrace(QuantizedLayer(codes, alpha, qset), [0.0], 0, True)

    flat = v.ravel()
    if init_alpha is not None:
        starts = [(float(init_alpha), None)]
    else:
        starts = [(default_alpha(v), None)] + [(a, None) for a in _anchor_alphas(v, qset)]
        if qset.contains_zero:
            starts += _support_candidates(flat)

    best = None
    for start, start_codes in starts:
        result = _alternate(flat, qset, start, max_iters, start_codes)
        if best is None or result[2][-1] < best[2][-1]:
            best = result

    alpha, codes, objectives, iterations, converged = best
    if not converged:
        logger.debug("projeção %s atingiu max_iters=%d", qset.name, max_iters)
    layer = QuantizedLayer(codes.reshape(v.shape), alpha, qset)
    return ProjectionTrace(layer, objectives, iterations, converged, len(starts))


def project_quantize(
    v: Tensor,
    qset: QuantizationSet,
    init_alpha: Optional[float] = None,
    max_iters: int = DEFAULT_MAX_ITERS,
    learn_alpha: bool = True,
) -> QuantizedLayer:
    """Projeção de V no codebook (ver iterative_quantize)"""
    return iterative_quantize(v, qset, init_alpha, max_iters, learn_alpha).layer
