"""
Pré-treino em precisão plena

Produz a rede de referência ("full precision") que o ADMM quantiza.
SGD com momento 0.9 e taxa em degraus.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from tensor_core import Tensor
from .evaluation import EvalReport
from .network import MomentumSGD, Network

logger = logging.getLogger(__name__)

BatchSource = Callable[[int], Iterable[Tuple[Tensor, np.ndarray]]]
"""Recebe o índice da época e devolve os batches dessa época"""


class DivergedTrainingError(RuntimeError):
    """Perda não finita durante o treino"""


@dataclass(frozen=True)
class StepDecay:
    """
    Taxa em degraus: lr(t) = initial · factor^(t // every)

    t é a época no pré-treino e a rodada no ADMM.
    """

    initial: float
    factor: float = 0.5
    every: int = 5

    def __post_init__(self) -> None:
        if not self.initial > 0:
            raise ValueError(f"Taxa inicial deve ser positiva: {self.initial}")
        if not 0 < self.factor <= 1:
            raise ValueError(f"Fator de decaimento deve estar em (0, 1]: {self.factor}")
        if self.every < 1:
            raise ValueError(f"Intervalo de decaimento deve ser >= 1: {self.every}")

    def __call__(self, t: int) -> float:
        return self.initial * self.factor ** (t // self.every)

    def to_dict(self) -> Dict[str, Any]:
        return {"initial": self.initial, "factor": self.factor, "every": self.every}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StepDecay":
        return cls(float(data["initial"]), float(data.get("factor", 0.5)), int(data.get("every", 5)))


@dataclass
class EpochRecord:
    """Linha do CSV de pré-treino"""

    epoch: int
    lr: float
    train_loss: Optional[float]
    """Perda média dos minibatches da época (None na época 0)"""

    test_top1: float
    test_top5: float
    test_loss: float

    def to_row(self) -> Dict[str, Any]:
        return {
            "epoch": self.epoch,
            "lr": self.lr,
            "train_loss": self.train_loss,
            "test_top1": self.test_top1,
            "test_top5": self.test_top5,
            "test_loss": self.test_loss,
        }


EPOCH_FIELDS = ["epoch", "lr", "train_loss", "test_top1", "test_top5", "test_loss"]


@dataclass
class PretrainResult:
    network: Network
    history: List[EpochRecord] = field(default_factory=list)
    final_lr: float = 0.0
    """Taxa em vigor ao fim do pré-treino (β padrão do ADMM)"""


def pretrain(
    net: Network,
    batch_source: BatchSource,
    epochs: int,
    schedule: StepDecay,
    evaluate_fn: Callable[[Network], EvalReport],
    momentum: float = 0.9,
) -> PretrainResult:
    """
    Treina a rede em precisão plena

    Args:
        net: Rede inicial (não é modificada)
        batch_source: Batches por época
        epochs: Número de épocas (0 devolve a inicialização)
        schedule: Taxa por época
        evaluate_fn: Avaliação no conjunto de teste após cada época
        momentum: Momento do SGD

    Returns:
        PretrainResult com a rede treinada e uma linha por época (inclui a época 0)
    """
    if epochs < 0:
        raise ValueError(f"Número de épocas negativo: {epochs}")

    report = evaluate_fn(net)
    history = [
        EpochRecord(0, schedule(0), None, report.top1, report.top5, report.loss)
    ]
    logger.info("época 0: top1=%.4f loss=%.4f", report.top1, report.loss)

    optimizer = MomentumSGD(schedule(0), momentum)
    for epoch in range(1, epochs + 1):
        optimizer.lr = schedule(epoch - 1)
        losses = []
        for images, labels in batch_source(epoch):
            grads = net.backward(images, labels)
            if not math.isfinite(grads.loss):
                raise DivergedTrainingError(
                    f"Perda não finita na época {epoch} (lr={optimizer.lr}); reduza a taxa"
                )
            losses.append(grads.loss)
            net = optimizer.step(net, grads)

        report = evaluate_fn(net)
        train_loss = float(np.mean(losses)) if losses else None
        history.append(
            EpochRecord(epoch, optimizer.lr, train_loss, report.top1, report.top5, report.loss)
        )
        logger.info(
            "época %d: lr=%g train_loss=%s top1=%.4f", epoch, optimizer.lr, train_loss, report.top1
        )

    return PretrainResult(network=net, history=history, final_lr=schedule(max(epochs - 1, 0)))
