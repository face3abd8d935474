"""
Arquiteturas de referência para MNIST

- mlp: 784-256-10
- cnn: conv 5×5×16 → relu → pool → conv 5×5×32 → relu → pool → fc 10
"""

from typing import Callable, Dict

import numpy as np

from .layers import (
    LayerSpec,
    NetworkConfigError,
    conv2d_layer,
    flatten,
    fully_connected,
    max_pool2d,
    relu,
    softmax_cross_entropy,
)
from .network import Network

MNIST_INPUT_SHAPE = (1, 28, 28)
NUM_CLASSES = 10


def mlp_layers(hidden: int = 256) -> list[LayerSpec]:
    """Camadas do MLP 784-hidden-10"""
    return [
        flatten(),
        fully_connected(784, hidden, "fc1"),
        relu(),
        fully_connected(hidden, NUM_CLASSES, "fc2"),
        softmax_cross_entropy(),
    ]


def cnn_layers() -> list[LayerSpec]:
    """Camadas da CNN pequena (28 → 24 → 12 → 8 → 4)"""
    return [
        conv2d_layer(1, 16, 5, "conv1"),
        relu(),
        max_pool2d(2),
        conv2d_layer(16, 32, 5, "conv2"),
        relu(),
        max_pool2d(2),
        flatten(),
        fully_connected(32 * 4 * 4, NUM_CLASSES, "fc1"),
        softmax_cross_entropy(),
    ]


ARCHITECTURES: Dict[str, Callable[[], list[LayerSpec]]] = {
    "mlp": mlp_layers,
    "cnn": cnn_layers,
}


def build_network(name: str, rng: np.random.Generator) -> Network:
    """
    Instancia arquitetura nomeada com inicialização He

    Args:
        name: "mlp" ou "cnn"
        rng: Gerador do subfluxo "init"

    Returns:
        Rede inicializada
    """
    if name not in ARCHITECTURES:
        raise NetworkConfigError(
            f"Arquitetura desconhecida: {name} (opções: {sorted(ARCHITECTURES)})"
        )
    return Network.initialize(ARCHITECTURES[name](), MNIST_INPUT_SHAPE, rng)
