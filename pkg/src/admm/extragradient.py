"""
Extragradiente (predição + correção) e problema de comparação

Um passo com operador F:
    z_p = z − β_p·F(z)
    z'  = z − β_c·F(z_p)

O problema de comparação fixo é o ponto de sela quadrático
    min_x max_y ½·x² + b·x·y − ½·c·y²
com b = 10 e c = 0.01 (razão de curvaturas diagonais 100): a mesma
estrutura do Lagrangiano em (W, μ). O operador é F(z) = J·z com
J = [[1, b], [−b, c]]; solução z* = 0.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from tensor_core import Tensor

logger = logging.getLogger(__name__)

Operator = Callable[[Tensor], Tensor]


def extragradient_step(z: Tensor, operator: Operator, beta_p: float, beta_c: float) -> Tensor:
    """Predição em z, correção com o operador avaliado no ponto predito"""
    z_pred = z - beta_p * operator(z)
    return z - beta_c * operator(z_pred)


def gradient_step(z: Tensor, operator: Operator, beta: float) -> Tensor:
    return z - beta * operator(z)


@dataclass(frozen=True)
class SaddleProblem:
    """Sela quadrática mal condicionada em duas dimensões"""

    coupling: float = 10.0
    curvature_x: float = 1.0
    curvature_y: float = 0.01

    @property
    def jacobian(self) -> Tensor:
        return np.array(
            [[self.curvature_x, self.coupling], [-self.coupling, self.curvature_y]],
            dtype=np.float64,
        )

    @property
    def condition_number(self) -> float:
        return self.curvature_x / self.curvature_y

    def operator(self, z: Tensor) -> Tensor:
        return self.jacobian @ z

    def loss(self, z: Tensor) -> float:
        """‖z − z*‖²"""
        return float(z @ z)


def iterations_to_tolerance(
    method: str,
    beta: float,
    problem: Optional[SaddleProblem] = None,
    z0: Sequence[float] = (1.0, 1.0),
    tolerance: float = 1e-6,
    max_iters: int = 5000,
) -> Optional[int]:
    """
    Iterações até a perda ficar <= tolerance

    Args:
        method: "extragradient" ou "gradient"
        beta: Passo (β_p = β_c = β no extragradiente)

    Returns:
        Número de iterações, ou None se divergir ou não chegar em max_iters
    """
    problem = problem or SaddleProblem()
    if method not in ("extragradient", "gradient"):
        raise ValueError(f"Método desconhecido: {method}")
    z = np.asarray(z0, dtype=np.float64)
    for it in range(1, max_iters + 1):
        if method == "extragradient":
            z = extragradient_step(z, problem.operator, beta, beta)
        else:
            z = gradient_step(z, problem.operator, beta)
        loss = problem.loss(z)
        if not math.isfinite(loss) or loss > 1e12:
            logger.debug("%s com β=%g divergiu na iteração %d", method, beta, it)
            return None
        if loss <= tolerance:
            return it
    return None


def compare_methods(
    betas: Sequence[float] = (0.01, 0.05, 0.1),
    problem: Optional[SaddleProblem] = None,
    tolerance: float = 1e-6,
    max_iters: int = 5000,
) -> List[Dict[str, Optional[float]]]:
    """Tabela β → iterações de cada método"""
    rows = []
    for beta in betas:
        rows.append({
            "beta": beta,
            "extragradient": iterations_to_tolerance(
                "extragradient", beta, problem, tolerance=tolerance, max_iters=max_iters
            ),
            "gradient": iterations_to_tolerance(
                "gradient", beta, problem, tolerance=tolerance, max_iters=max_iters
            ),
        })
    return rows
