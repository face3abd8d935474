"""
Avaliação single-view (sem aumento de dados no teste)
"""

from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional

import numpy as np

from tensor_core import Tensor
from .layers import softmax_cross_entropy_forward


class EmptyDatasetError(ValueError):
    """Avaliação pedida sobre conjunto sem amostras"""


@dataclass
class EvalReport:
    """Resultado de uma avaliação"""

    top1: float
    """Fração de acertos na classe mais provável"""

    top5: float
    """Fração de rótulos entre as 5 classes mais prováveis"""

    loss: float
    """Entropia cruzada média"""

    samples: int

    def to_dict(self) -> Dict[str, Any]:
        return {"top1": self.top1, "top5": self.top5, "loss": self.loss, "samples": self.samples}

    def __repr__(self) -> str:
        return f"EvalReport(top1={self.top1:.4f}, top5={self.top5:.4f}, loss={self.loss:.4f}, n={self.samples})"


def evaluate_logits(
    logits_fn: Callable[[Tensor], Tensor],
    images: Tensor,
    labels: np.ndarray,
    batch_size: int = 1000,
) -> EvalReport:
    """
    Avalia qualquer função de logits em ordem fixa

    Args:
        logits_fn: Mapeia batch (N, ...) em logits (N, classes)
        images: Entradas
        labels: Rótulos
        batch_size: Tamanho dos blocos de avaliação

    Returns:
        EvalReport com top-1, top-5 e perda média

    Raises:
        EmptyDatasetError: Se não houver amostras
    """
    n = int(labels.shape[0])
    if n == 0:
        raise EmptyDatasetError("Conjunto de avaliação vazio")

    correct1 = 0
    correct5 = 0
    loss_sum = 0.0
    for start in range(0, n, batch_size):
        x = images[start:start + batch_size]
        y = labels[start:start + batch_size]
        logits = logits_fn(x)
        loss, _ = softmax_cross_entropy_forward(logits, y)
        loss_sum += loss * len(y)

        correct1 += int((logits.argmax(axis=1) == y).sum())
        k = min(5, logits.shape[1])
        # estável: empates resolvidos pelo índice
        top = np.argsort(-logits, axis=1, kind="stable")[:, :k]
        correct5 += int((top == y[:, None]).any(axis=1).sum())

    return EvalReport(top1=correct1 / n, top5=correct5 / n, loss=loss_sum / n, samples=n)


def evaluate(net: Any, images: Tensor, labels: np.ndarray, batch_size: int = 1000) -> EvalReport:
    """Avalia uma Network (ou qualquer objeto com .logits)"""
    return evaluate_logits(net.logits, images, labels, batch_size)


def accuracy(net: Any, images: Tensor, labels: np.ndarray, batch_size: Optional[int] = None) -> float:
    """Atalho para top-1"""
    return evaluate(net, images, labels, batch_size or 1000).top1
