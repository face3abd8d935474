"""
Relatório por camada (comando inspect)

Tamanhos empacotados: ceil(bits·d/8) bytes de códigos mais 8 bytes da
escala; o bias em f8 é contado à parte.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional

from quantset import Int8Layer, QuantizedLayer
from .container import QuantizedModel
from .packing import packed_size

SCALE_BYTES = 8


@dataclass
class LayerReport:
    """Resumo de uma camada parametrizada"""

    name: str
    payload: str
    """codebook, int8 ou full_precision"""

    alphabet: Optional[List[int]]
    scale: Optional[float]
    """α (codebook) ou escala (int8)"""

    weights: int
    zero_fraction: float
    bits_per_weight: int
    packed_bytes: int
    """Tamanho empacotado dos pesos, incluindo a escala"""

    bias_bytes: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "payload": self.payload,
            "alphabet": self.alphabet,
            "scale": self.scale,
            "weights": self.weights,
            "zero_fraction": self.zero_fraction,
            "bits_per_weight": self.bits_per_weight,
            "packed_bytes": self.packed_bytes,
            "bias_bytes": self.bias_bytes,
        }


def inspect_model(model: QuantizedModel) -> List[LayerReport]:
    """Um LayerReport por camada parametrizada"""
    reports = []
    for name, payload, bias in zip(model.names, model.payloads, model.biases):
        count = 1
        for d in payload.shape:
            count *= d
        bias_bytes = 0 if bias is None else 8 * bias.size
        if isinstance(payload, QuantizedLayer):
            bits = payload.qset.bits_per_weight
            reports.append(LayerReport(
                name, "codebook", payload.qset.alphabet.tolist(), payload.alpha, count,
                payload.zero_fraction, bits, packed_size(count, bits) + SCALE_BYTES, bias_bytes,
            ))
        elif isinstance(payload, Int8Layer):
            zero = float((payload.codes == 0).mean()) if count else 0.0
            reports.append(LayerReport(
                name, "int8", None, payload.scale, count, zero, 8, count + SCALE_BYTES, bias_bytes,
            ))
        else:
            zero = float((payload.weights == 0).mean()) if count else 0.0
            reports.append(LayerReport(
                name, "full_precision", None, None, count, zero, 64, 8 * count, bias_bytes,
            ))
    return reports


def format_report(reports: List[LayerReport]) -> str:
    """Tabela legível, uma linha por camada"""
    lines = [f"{'layer':<10} {'payload':<15} {'alphabet':<22} {'scale':>12} "
             f"{'zeros':>7} {'bits':>5} {'packed':>10}"]
    for r in reports:
        alphabet = "{" + ",".join(str(a) for a in r.alphabet) + "}" if r.alphabet else "-"
        scale = f"{r.scale:.6g}" if r.scale is not None else "-"
        lines.append(
            f"{r.name:<10} {r.payload:<15} {alphabet:<22} {scale:>12} "
            f"{r.zero_fraction:>7.3f} {r.bits_per_weight:>5} {r.packed_bytes:>10}"
        )
    return "\n".join(lines)
