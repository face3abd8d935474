"""
Estado do ADMM: triplas (W_i, G_i, λ_i) por camada, ρ e histórico

λ é o dual escalado (λ = μ/ρ); μ não é armazenado.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from quantset import ProjectedLayer, layer_scale
from tensor_core import ShapeMismatchError, Tensor

ROUND_FIELDS = [
    "round",
    "seed",
    "train_loss",
    "eval_accuracy",
    "primal_residual",
    "relative_residual",
    "rho",
    "lagrangian",
    "projection_iterations",
]


@dataclass
class RoundRecord:
    """Uma linha do histórico por rodada"""

    round: int
    seed: int
    train_loss: float
    eval_accuracy: Optional[float]
    """Top-1 de G (None sem conjunto de avaliação)"""

    primal_residual: float
    relative_residual: float
    rho: float
    lagrangian: float
    projection_iterations: int
    alphas: Dict[str, Optional[float]] = field(default_factory=dict)

    def to_row(self) -> Dict[str, Any]:
        row: Dict[str, Any] = {name: getattr(self, name) for name in ROUND_FIELDS}
        for name, alpha in self.alphas.items():
            row[f"alpha_{name}"] = alpha
        return row


@dataclass
class AdmmState:
    """Estado completo do Lagrangiano aumentado"""

    weights: List[Tensor]
    projected: List[ProjectedLayer]
    duals: List[Tensor]
    rho: float
    names: List[str]
    round: int = 0
    history: List[RoundRecord] = field(default_factory=list)

    def __post_init__(self) -> None:
        n = len(self.weights)
        if not (len(self.projected) == len(self.duals) == len(self.names) == n):
            raise ShapeMismatchError("W, G, λ e nomes precisam ter o mesmo número de camadas")
        for name, w, g, lam in zip(self.names, self.weights, self.projected, self.duals):
            if not (w.shape == g.shape == lam.shape):
                raise ShapeMismatchError(
                    f"{name}: W {w.shape}, G {g.shape}, λ {lam.shape} divergem"
                )

    def realized(self) -> List[Tensor]:
        """G_i em float64"""
        return [g.realize() for g in self.projected]

    def residuals(self) -> List[Tensor]:
        """W_i − G_i"""
        return [w - g for w, g in zip(self.weights, self.realized())]

    def primal_residual(self) -> float:
        """‖W − G‖ sobre todas as camadas"""
        return math.sqrt(sum(float(np.vdot(r, r)) for r in self.residuals()))

    def relative_residual(self) -> float:
        """‖W − G‖ / ‖W‖ (o próprio resíduo quando W = 0)"""
        primal = self.primal_residual()
        norm = math.sqrt(sum(float(np.vdot(w, w)) for w in self.weights))
        return primal / norm if norm > 0 else primal

    def penalty(self, rho: Optional[float] = None) -> float:
        """(ρ/2)·Σ‖W − G + λ‖²"""
        rho = self.rho if rho is None else rho
        total = 0.0
        for w, g, lam in zip(self.weights, self.realized(), self.duals):
            d = w - g + lam
            total += float(np.vdot(d, d))
        return 0.5 * rho * total

    def dual_energy(self) -> float:
        """(ρ/2)·Σ‖λ‖²"""
        return 0.5 * self.rho * sum(float(np.vdot(lam, lam)) for lam in self.duals)

    def alphas(self) -> Dict[str, Optional[float]]:
        return {name: layer_scale(g) for name, g in zip(self.names, self.projected)}
