"""
Inferência quantizada sem multiplicações nos pesos

Uma camada de codebook com códigos em {0, ±1, ±2, …, ±2^N} é avaliada
como
    y = α · Σ_k 2^k · (Σ_{Q=+2^k} x − Σ_{Q=−2^k} x)
isto é, somas mascaradas, deslocamentos aritméticos (ldexp) e uma única
multiplicação por α por elemento de saída.

Convoluções são reduzidas ao caso denso via extract_patches.
"""

from collections import Counter
from typing import Optional

import numpy as np

from network import LayerKind, LayerSpec, layer_forward
from quantset import FullPrecisionLayer, Int8Layer, ProjectedLayer, QuantizedLayer
from tensor_core import ShapeMismatchError, Tensor, extract_patches
from .container import QuantizedModel


class ShiftAddKernel:
    """Primitivas da avaliação multiplicação-free"""

    def accumulate(self, x: Tensor, mask: np.ndarray) -> Tensor:
        """Soma mascarada: out[n, j] = Σ_{i: mask[i, j]} x[n, i]"""
        if x.shape[1] != mask.shape[0]:
            raise ShapeMismatchError(f"Entrada {x.shape} incompatível com máscara {mask.shape}")
        out = np.zeros((x.shape[0], mask.shape[1]), dtype=np.float64)
        for j in range(mask.shape[1]):
            rows = np.flatnonzero(mask[:, j])
            if rows.size:
                out[:, j] = x[:, rows].sum(axis=1)
        return out

    def shift(self, v: Tensor, k: int) -> Tensor:
        """v · 2^k exato"""
        return np.ldexp(v, k)

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        return a + b

    def subtract(self, a: Tensor, b: Tensor) -> Tensor:
        return a - b

    def scale(self, v: Tensor, alpha: float) -> Tensor:
        """A única multiplicação em ponto flutuante por saída"""
        return v * alpha

    def integer_matmul(self, x: Tensor, codes: np.ndarray) -> Tensor:
        """Produto com códigos int8 genéricos"""
        return x @ codes.astype(np.float64)


class CountingKernel(ShiftAddKernel):
    """ShiftAddKernel que conta operações escalares"""

    def __init__(self) -> None:
        self.counts: Counter = Counter()

    def accumulate(self, x: Tensor, mask: np.ndarray) -> Tensor:
        self.counts["add"] += int(x.shape[0] * mask.sum())
        return super().accumulate(x, mask)

    def shift(self, v: Tensor, k: int) -> Tensor:
        self.counts["shift"] += v.size
        return super().shift(v, k)

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        self.counts["add"] += a.size
        return super().add(a, b)

    def subtract(self, a: Tensor, b: Tensor) -> Tensor:
        self.counts["subtract"] += a.size
        return super().subtract(a, b)

    def scale(self, v: Tensor, alpha: float) -> Tensor:
        self.counts["multiply"] += v.size
        return super().scale(v, alpha)

    def integer_matmul(self, x: Tensor, codes: np.ndarray) -> Tensor:
        self.counts["multiply"] += x.shape[0] * codes.size
        return super().integer_matmul(x, codes)


def shift_add_matmul(x: Tensor, layer: QuantizedLayer, kernel: ShiftAddKernel) -> Tensor:
    """
    x @ (α·Q) por somas e deslocamentos

    Args:
        x: (N, in)
        layer: Códigos (in, out) e α
        kernel: Primitivas

    Returns:
        (N, out)
    """
    codes = layer.codes.astype(np.int64)
    total: Optional[Tensor] = None
    for level in layer.qset.positive_levels:
        k = int(level).bit_length() - 1
        term = kernel.subtract(
            kernel.accumulate(x, codes == level),
            kernel.accumulate(x, codes == -level),
        )
        if k:
            term = kernel.shift(term, k)
        total = term if total is None else kernel.add(total, term)
    return kernel.scale(total, layer.alpha)


def _dense(x: Tensor, payload: ProjectedLayer, kernel: ShiftAddKernel) -> Tensor:
    if isinstance(payload, QuantizedLayer):
        return shift_add_matmul(x, payload, kernel)
    if isinstance(payload, Int8Layer):
        return kernel.scale(kernel.integer_matmul(x, payload.codes), payload.scale)
    return x @ payload.weights


def _as_matrix(payload: ProjectedLayer) -> ProjectedLayer:
    """Pesos de conv (F, C, kh, kw) vistos como (C·kh·kw, F)"""
    f = payload.shape[0]
    if isinstance(payload, QuantizedLayer):
        return QuantizedLayer(payload.codes.reshape(f, -1).T, payload.alpha, payload.qset)
    if isinstance(payload, Int8Layer):
        return Int8Layer(payload.codes.reshape(f, -1).T, payload.scale)
    assert isinstance(payload, FullPrecisionLayer)
    return FullPrecisionLayer(payload.weights.reshape(f, -1).T)


def _param_layer(
    spec: LayerSpec,
    x: Tensor,
    payload: ProjectedLayer,
    bias: Optional[Tensor],
    kernel: ShiftAddKernel,
) -> Tensor:
    if spec.kind == LayerKind.FULLY_CONNECTED:
        out = _dense(x, payload, kernel)
        return out if bias is None else kernel.add(out, np.broadcast_to(bias, out.shape))

    kh, kw = spec.kernel_size
    stride, pad = spec.dims[4], spec.dims[5]
    patches = extract_patches(x, kh, kw, stride, pad)
    n, c, oh, ow = patches.shape[:4]
    cols = patches.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, c * kh * kw)
    out = _dense(cols, _as_matrix(payload), kernel)
    if bias is not None:
        out = kernel.add(out, np.broadcast_to(bias, out.shape))
    return np.ascontiguousarray(out.reshape(n, oh, ow, -1).transpose(0, 3, 1, 2))


def quantized_forward(
    model: QuantizedModel,
    batch: Tensor,
    kernel: Optional[ShiftAddKernel] = None,
) -> Tensor:
    """
    Logits pelo caminho de somas e deslocamentos

    Args:
        model: Modelo (camadas de codebook, int8 ou precisão plena)
        batch: Entradas (N, *input_shape)
        kernel: Primitivas (padrão ShiftAddKernel)

    Returns:
        Logits (N, classes)
    """
    kernel = kernel or ShiftAddKernel()
    batch = np.asarray(batch, dtype=np.float64)
    if batch.shape[1:] != model.input_shape:
        raise ShapeMismatchError(f"Batch {batch.shape} incompatível com {model.input_shape}")

    x = batch
    k = 0
    for spec in model.layers[:-1]:
        if spec.is_parameterized:
            x = _param_layer(spec, x, model.payloads[k], model.biases[k], kernel)
            k += 1
        else:
            x, _ = layer_forward(spec, x)
    return x
