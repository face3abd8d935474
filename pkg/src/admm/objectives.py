"""
Funções objetivo f(W) para o passo proximal

Parâmetros livres (biases) ficam fora da restrição W = G e recebem o
gradiente puro de f.
"""

from typing import Any, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from network import Network
from tensor_core import ShapeMismatchError, Tensor

FreeParams = List[Optional[Tensor]]


class Objective(Protocol):
    """Perda diferenciável sobre (pesos restritos, parâmetros livres)"""

    def loss_and_gradient(
        self, weights: Sequence[Tensor], free: FreeParams, batch: Any
    ) -> Tuple[float, List[Tensor], FreeParams]:
        ...


class NetworkObjective:
    """f(W) = entropia cruzada média da rede no minibatch"""

    def __init__(self, template: Network):
        self.template = template

    def initial_free(self) -> FreeParams:
        return [None if b is None else b.copy() for b in self.template.biases]

    def loss_and_gradient(
        self, weights: Sequence[Tensor], free: FreeParams, batch: Any
    ) -> Tuple[float, List[Tensor], FreeParams]:
        images, labels = batch
        net = self.template.with_parameters(list(weights), list(free))
        grads = net.backward(images, labels)
        return grads.loss, grads.weights, grads.biases


class QuadraticObjective:
    """
    f(W) = ½·c·Σ‖W_i − t_i‖²

    c = 0 dá f ≡ 0. O batch é ignorado.
    """

    def __init__(self, targets: Sequence[Tensor], curvature: float = 1.0):
        if curvature < 0:
            raise ValueError(f"Curvatura deve ser não negativa: {curvature}")
        self.targets = [np.asarray(t, dtype=np.float64) for t in targets]
        self.curvature = float(curvature)

    def initial_free(self) -> FreeParams:
        return []

    def loss_and_gradient(
        self, weights: Sequence[Tensor], free: FreeParams, batch: Any
    ) -> Tuple[float, List[Tensor], FreeParams]:
        if len(weights) != len(self.targets):
            raise ShapeMismatchError(f"{len(weights)} camadas para {len(self.targets)} alvos")
        loss = 0.0
        grads = []
        for w, t in zip(weights, self.targets):
            if w.shape != t.shape:
                raise ShapeMismatchError(f"Pesos {w.shape} para alvo {t.shape}")
            d = w - t
            loss += 0.5 * self.curvature * float(np.vdot(d, d))
            grads.append(self.curvature * d)
        return loss, grads, []
