"""
Network - Rede feed-forward com retropropagação exata

Implementa a perda f(W) (entropia cruzada média) e seu gradiente
∂_W f, usado pelo passo proximal do ADMM.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from tensor_core import Tensor
from .layers import (
    LayerKind,
    LayerSpec,
    NetworkConfigError,
    layer_backward,
    layer_forward,
    softmax_cross_entropy_forward,
)

logger = logging.getLogger(__name__)


@dataclass
class Gradients:
    """Gradientes de uma avaliação forward/backward"""

    weights: list[Tensor]
    """Um gradiente por tensor de pesos (mesma forma)"""

    biases: list[Optional[Tensor]]
    """Gradiente de bias por camada parametrizada (None sem bias)"""

    loss: float
    """Perda média do batch"""


class Network:
    """
    Rede feed-forward

    Propriedades:
    - Última camada é sempre softmax_cross_entropy
    - Um tensor de pesos por camada parametrizada (os W_i do ADMM)
    - Biases em precisão plena, fora da restrição
    """

    def __init__(
        self,
        layers: Sequence[LayerSpec],
        input_shape: Sequence[int],
        weights: Optional[Sequence[Tensor]] = None,
        biases: Optional[Sequence[Optional[Tensor]]] = None,
    ):
        """
        Inicializa rede

        Args:
            layers: Camadas em ordem
            input_shape: Forma de uma amostra (sem batch)
            weights: Pesos por camada parametrizada (zeros se omitido)
            biases: Biases por camada parametrizada (zeros se omitido)
        """
        self.layers: tuple[LayerSpec, ...] = tuple(layers)
        self.input_shape: tuple[int, ...] = tuple(int(d) for d in input_shape)
        self.shapes = self._validate_architecture()

        self.param_layers: list[int] = [
            i for i, spec in enumerate(self.layers) if spec.is_parameterized
        ]

        specs = self.parameterized_specs
        if weights is None:
            weights = [np.zeros(s.weight_shape) for s in specs]
        if biases is None:
            biases = [np.zeros(s.bias_shape) if s.has_bias else None for s in specs]

        if len(weights) != len(specs) or len(biases) != len(specs):
            raise NetworkConfigError(
                f"{len(specs)} camadas parametrizadas, recebeu "
                f"{len(weights)} pesos e {len(biases)} biases"
            )

        self.weights: list[Tensor] = []
        self.biases: list[Optional[Tensor]] = []
        for spec, w, b in zip(specs, weights, biases):
            w = np.asarray(w, dtype=np.float64)
            if w.shape != spec.weight_shape:
                raise NetworkConfigError(
                    f"{spec.name}: pesos {w.shape}, esperado {spec.weight_shape}"
                )
            self.weights.append(w)
            if spec.has_bias:
                if b is None:
                    raise NetworkConfigError(f"{spec.name}: bias ausente")
                b = np.asarray(b, dtype=np.float64)
                if b.shape != spec.bias_shape:
                    raise NetworkConfigError(
                        f"{spec.name}: bias {b.shape}, esperado {spec.bias_shape}"
                    )
                self.biases.append(b)
            else:
                self.biases.append(None)

    def _validate_architecture(self) -> list[tuple[int, ...]]:
        if len(self.layers) == 0:
            raise NetworkConfigError("Rede sem camadas")
        if self.layers[-1].kind != LayerKind.SOFTMAX_CROSS_ENTROPY:
            raise NetworkConfigError("Última camada deve ser softmax_cross_entropy")
        if any(s.kind == LayerKind.SOFTMAX_CROSS_ENTROPY for s in self.layers[:-1]):
            raise NetworkConfigError("softmax_cross_entropy só pode aparecer no fim")

        names = [s.name for s in self.layers if s.is_parameterized]
        if len(set(names)) != len(names) or "" in names:
            raise NetworkConfigError(f"Camadas parametrizadas precisam de nomes únicos: {names}")

        shapes = [self.input_shape]
        for spec in self.layers[:-1]:
            shapes.append(spec.output_shape(shapes[-1]))
        if len(shapes[-1]) != 1:
            raise NetworkConfigError(f"Logits devem ser vetoriais, recebeu {shapes[-1]}")
        return shapes

    @classmethod
    def initialize(
        cls,
        layers: Sequence[LayerSpec],
        input_shape: Sequence[int],
        rng: np.random.Generator,
    ) -> "Network":
        """
        Cria rede com inicialização He (normal) e biases nulos

        Args:
            layers: Camadas
            input_shape: Forma de uma amostra
            rng: Gerador (subfluxo "init")
        """
        net = cls(layers, input_shape)
        for k, spec in enumerate(net.parameterized_specs):
            shape = spec.weight_shape
            fan_in = shape[0] if spec.kind == LayerKind.FULLY_CONNECTED else int(np.prod(shape[1:]))
            net.weights[k] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)
        return net

    @property
    def parameterized_specs(self) -> list[LayerSpec]:
        """LayerSpecs das camadas com pesos, em ordem"""
        return [self.layers[i] for i in self.param_layers]

    @property
    def num_classes(self) -> int:
        return self.shapes[-1][0]

    def copy(self) -> "Network":
        """Cópia profunda"""
        return Network(
            self.layers,
            self.input_shape,
            [w.copy() for w in self.weights],
            [None if b is None else b.copy() for b in self.biases],
        )

    def with_parameters(
        self,
        weights: Sequence[Tensor],
        biases: Optional[Sequence[Optional[Tensor]]] = None,
    ) -> "Network":
        """Nova rede com a mesma arquitetura e outros parâmetros"""
        return Network(self.layers, self.input_shape, weights, self.biases if biases is None else biases)

    def _check_batch(self, batch: Tensor, labels: Optional[np.ndarray] = None) -> None:
        if batch.ndim != len(self.input_shape) + 1 or batch.shape[1:] != self.input_shape:
            raise NetworkConfigError(
                f"Batch {batch.shape} incompatível com entrada {self.input_shape}"
            )
        if labels is not None:
            if labels.shape != (batch.shape[0],):
                raise NetworkConfigError(
                    f"Rótulos {labels.shape} não batem com batch de {batch.shape[0]}"
                )
            if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
                raise NetworkConfigError(f"Rótulos fora de [0, {self.num_classes})")

    def _forward_trace(self, batch: Tensor) -> tuple[Tensor, list]:
        caches = []
        x = np.asarray(batch, dtype=np.float64)
        k = 0
        for spec in self.layers[:-1]:
            if spec.is_parameterized:
                x, cache = layer_forward(spec, x, self.weights[k], self.biases[k])
                k += 1
            else:
                x, cache = layer_forward(spec, x)
            caches.append(cache)
        return x, caches

    def logits(self, batch: Tensor) -> Tensor:
        """Saída antes da perda (N, classes)"""
        self._check_batch(batch)
        out, _ = self._forward_trace(batch)
        return out

    def predict(self, batch: Tensor) -> np.ndarray:
        """Classe de maior logit por amostra"""
        return self.logits(batch).argmax(axis=1)

    def forward(self, batch: Tensor, labels: np.ndarray) -> float:
        """
        Perda f(W): entropia cruzada média

        Args:
            batch: Entradas (N, *input_shape)
            labels: Rótulos inteiros (N,)

        Returns:
            Perda média finita
        """
        self._check_batch(batch, labels)
        logits, _ = self._forward_trace(batch)
        loss, _ = softmax_cross_entropy_forward(logits, labels)
        return loss

    def backward(self, batch: Tensor, labels: np.ndarray) -> Gradients:
        """
        Gradiente exato da perda média

        Returns:
            Gradients com um tensor por peso/bias
        """
        self._check_batch(batch, labels)
        logits, caches = self._forward_trace(batch)
        loss, grad = softmax_cross_entropy_forward(logits, labels)

        n_params = len(self.weights)
        grad_w: list[Optional[Tensor]] = [None] * n_params
        grad_b: list[Optional[Tensor]] = [None] * n_params
        k = n_params
        for spec, cache in zip(reversed(self.layers[:-1]), reversed(caches)):
            if spec.is_parameterized:
                k -= 1
                grad, grad_w[k], grad_b[k] = layer_backward(spec, grad, cache, self.weights[k])
            else:
                grad, _, _ = layer_backward(spec, grad, cache)

        return Gradients(weights=grad_w, biases=grad_b, loss=loss)  # type: ignore[arg-type]

    def __repr__(self) -> str:
        names = ", ".join(s.name for s in self.parameterized_specs)
        return f"Network(input={self.input_shape}, params=[{names}])"


def sgd_step(net: Network, gradients: Gradients, lr: float) -> Network:
    """
    Passo de SGD: w ← w − lr·g

    Args:
        net: Rede atual (não é modificada)
        gradients: Gradientes da rede
        lr: Taxa de aprendizado (> 0)

    Returns:
        Nova rede atualizada
    """
    if lr <= 0:
        raise ValueError(f"Taxa de aprendizado deve ser positiva: {lr}")
    if len(gradients.weights) != len(net.weights):
        raise NetworkConfigError("Número de gradientes difere do número de pesos")

    weights = []
    for w, g in zip(net.weights, gradients.weights):
        if g.shape != w.shape:
            raise NetworkConfigError(f"Gradiente {g.shape} para pesos {w.shape}")
        weights.append(w - lr * g)

    biases: list[Optional[Tensor]] = []
    for b, g in zip(net.biases, gradients.biases):
        biases.append(None if b is None else (b if g is None else b - lr * g))
    return net.with_parameters(weights, biases)


class MomentumSGD:
    """
    SGD com momento (v ← μ·v + g; w ← w − lr·v)

    Otimizador do pré-treino em precisão plena.
    """

    def __init__(self, lr: float, momentum: float = 0.9):
        if lr <= 0:
            raise ValueError(f"Taxa de aprendizado deve ser positiva: {lr}")
        if not 0.0 <= momentum < 1.0:
            raise ValueError(f"Momento deve estar em [0, 1): {momentum}")
        self.lr = lr
        self.momentum = momentum
        self._velocity_w: Optional[list[Tensor]] = None
        self._velocity_b: Optional[list[Optional[Tensor]]] = None

    def step(self, net: Network, gradients: Gradients) -> Network:
        """Aplica um passo e devolve a nova rede"""
        if self._velocity_w is None:
            self._velocity_w = [np.zeros_like(w) for w in net.weights]
            self._velocity_b = [None if b is None else np.zeros_like(b) for b in net.biases]

        velocity = Gradients(weights=[], biases=[], loss=gradients.loss)
        for k, g in enumerate(gradients.weights):
            self._velocity_w[k] = self.momentum * self._velocity_w[k] + g
            velocity.weights.append(self._velocity_w[k])
        for k, g in enumerate(gradients.biases):
            if g is None or self._velocity_b[k] is None:
                velocity.biases.append(None)
                continue
            self._velocity_b[k] = self.momentum * self._velocity_b[k] + g
            velocity.biases.append(self._velocity_b[k])
        return sgd_step(net, velocity, self.lr)
