"""
Network Module

Rede feed-forward mínima com retropropagação exata: a perda f(W) e seu
gradiente ∂_W f, mais o pré-treino em precisão plena e a avaliação.
"""

from .layers import (
    LayerKind,
    LayerSpec,
    NetworkConfigError,
    PARAMETERIZED_KINDS,
    conv2d_layer,
    flatten,
    fully_connected,
    layer_backward,
    layer_forward,
    max_pool2d,
    relu,
    softmax_cross_entropy,
    softmax_cross_entropy_forward,
)
from .network import Gradients, MomentumSGD, Network, sgd_step
from .architectures import ARCHITECTURES, MNIST_INPUT_SHAPE, build_network, cnn_layers, mlp_layers
from .evaluation import EmptyDatasetError, EvalReport, accuracy, evaluate, evaluate_logits
from .training import (
    EPOCH_FIELDS,
    DivergedTrainingError,
    EpochRecord,
    PretrainResult,
    StepDecay,
    pretrain,
)

__all__ = [
    "LayerKind",
    "LayerSpec",
    "NetworkConfigError",
    "PARAMETERIZED_KINDS",
    "conv2d_layer",
    "flatten",
    "fully_connected",
    "layer_backward",
    "layer_forward",
    "max_pool2d",
    "relu",
    "softmax_cross_entropy",
    "softmax_cross_entropy_forward",
    "Gradients",
    "MomentumSGD",
    "Network",
    "sgd_step",
    "ARCHITECTURES",
    "MNIST_INPUT_SHAPE",
    "build_network",
    "cnn_layers",
    "mlp_layers",
    "EmptyDatasetError",
    "EvalReport",
    "accuracy",
    "evaluate",
    "evaluate_logits",
    "EPOCH_FIELDS",
    "DivergedTrainingError",
    "EpochRecord",
    "PretrainResult",
    "StepDecay",
    "pretrain",
]
