#!/usr/bin/env python3.11
"""
Experimento 03: Custo da inferência por somas e deslocamentos

Projeta um MLP 784-256-10 em cada alfabeto e conta as operações
escalares do caminho quantizado contra as multiplicações do produto
denso. Com um modelo salvo (argumento opcional) conta sobre ele.
"""

import sys
from pathlib import Path

import numpy as np

# Adiciona src ao path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from model_io import CountingKernel, QuantizedModel, inspect_model, load, quantized_forward
from network import build_network
from quantset import QuantizationSet, project_quantize
from tensor_core import substream


def count(model: QuantizedModel, batch: np.ndarray) -> tuple[dict, float]:
    kernel = CountingKernel()
    logits = quantized_forward(model, batch, kernel)
    gap = float(np.max(np.abs(logits - model.logits(batch))))
    return dict(kernel.counts), gap


def main():
    print("=== Experimento 03: Inferência shift/add ===\n")
    batch = substream(0, "eval").normal(size=(8, 1, 28, 28))

    if len(sys.argv) > 1:
        model = load(sys.argv[1])
        counts, gap = count(model, batch)
        print(f"Modelo: {sys.argv[1]}")
        for report in inspect_model(model):
            print(f"  {report.name}: {report.payload} {report.bits_per_weight} bits")
        print(f"  Operações: {counts}")
        print(f"  Diferença máxima para o caminho float: {gap:.2e}")
        return

    net = build_network("mlp", substream(0, "init"))
    dense_multiplies = batch.shape[0] * sum(w.size for w in net.weights)
    print(f"Produto denso: {dense_multiplies} multiplicações\n")

    print(f"{'alfabeto':<10} {'mult':>8} {'shift':>8} {'add':>10} {'sub':>10} {'|Δ|':>9}")
    for name in ("binary", "ternary", "pow2:1", "pow2:2", "pow2:4"):
        qset = QuantizationSet.parse(name)
        payloads = [project_quantize(w, qset) for w in net.weights]
        model = QuantizedModel(net.layers, net.input_shape, payloads, net.biases, {"set": name})
        counts, gap = count(model, batch)
        print(
            f"{name:<10} {counts.get('multiply', 0):>8} {counts.get('shift', 0):>8} "
            f"{counts.get('add', 0):>10} {counts.get('subtract', 0):>10} {gap:>9.1e}"
        )


if __name__ == "__main__":
    main()
