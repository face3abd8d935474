"""
Camadas da rede feed-forward

Cada camada é descrita por um LayerSpec imutável; o cálculo fica em
funções puras (forward devolve um cache, backward consome o cache).

Convenções de forma (por amostra, sem a dimensão de batch):
- fully_connected: entrada (in,), pesos (in, out)
- conv2d: entrada (C, H, W), pesos (F, C, kh, kw)
- max_pool2d: janela quadrada, passo igual à janela
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

from tensor_core import Tensor, conv2d, conv2d_backward, conv_output_size, ShapeMismatchError


class NetworkConfigError(ValueError):
    """Arquitetura inconsistente"""


class LayerKind(Enum):
    """Tipo de camada"""
    FULLY_CONNECTED = "fully_connected"
    CONV2D = "conv2d"
    RELU = "relu"
    MAX_POOL2D = "max_pool2d"
    FLATTEN = "flatten"
    SOFTMAX_CROSS_ENTROPY = "softmax_cross_entropy"


PARAMETERIZED_KINDS = frozenset({LayerKind.FULLY_CONNECTED, LayerKind.CONV2D})


@dataclass(frozen=True)
class LayerSpec:
    """
    Descrição de uma camada

    dims por tipo:
    - fully_connected: (in_features, out_features)
    - conv2d: (in_channels, out_channels, kh, kw, stride, pad)
    - max_pool2d: (size,)
    - demais: ()
    """

    kind: LayerKind
    """Tipo da camada"""

    dims: tuple[int, ...] = ()
    """Parâmetros de forma específicos do tipo"""

    has_bias: bool = False
    """Se a camada tem bias (nunca quantizado)"""

    name: str = ""
    """Nome usado pelos seletores de política por camada"""

    def __post_init__(self) -> None:
        expected = {
            LayerKind.FULLY_CONNECTED: 2,
            LayerKind.CONV2D: 6,
            LayerKind.MAX_POOL2D: 1,
        }.get(self.kind, 0)
        if len(self.dims) != expected:
            raise NetworkConfigError(
                f"{self.kind.value} espera {expected} dimensões, recebeu {self.dims}"
            )
        if any(d < 0 for d in self.dims):
            raise NetworkConfigError(f"Dimensões negativas em {self.kind.value}: {self.dims}")
        if self.has_bias and not self.is_parameterized:
            raise NetworkConfigError(f"{self.kind.value} não aceita bias")

    @property
    def is_parameterized(self) -> bool:
        """True para camadas com tensor de pesos"""
        return self.kind in PARAMETERIZED_KINDS

    @property
    def weight_shape(self) -> tuple[int, ...]:
        """Forma do tensor de pesos"""
        if self.kind == LayerKind.FULLY_CONNECTED:
            return (self.dims[0], self.dims[1])
        if self.kind == LayerKind.CONV2D:
            in_ch, out_ch, kh, kw = self.dims[:4]
            return (out_ch, in_ch, kh, kw)
        raise NetworkConfigError(f"{self.kind.value} não tem pesos")

    @property
    def bias_shape(self) -> tuple[int, ...]:
        """Forma do bias (out_features ou out_channels)"""
        if not self.is_parameterized:
            raise NetworkConfigError(f"{self.kind.value} não tem bias")
        return (self.dims[1],)

    @property
    def kernel_size(self) -> tuple[int, int]:
        """(kh, kw) de uma convolução"""
        if self.kind != LayerKind.CONV2D:
            raise NetworkConfigError(f"{self.kind.value} não é convolução")
        return (self.dims[2], self.dims[3])

    def output_shape(self, input_shape: tuple[int, ...]) -> tuple[int, ...]:
        """
        Forma da saída por amostra

        Raises:
            NetworkConfigError: Se a entrada não for compatível
        """
        kind = self.kind
        if kind == LayerKind.FULLY_CONNECTED:
            if input_shape != (self.dims[0],):
                raise NetworkConfigError(
                    f"{self.name or kind.value}: entrada {input_shape}, esperado ({self.dims[0]},)"
                )
            return (self.dims[1],)
        if kind == LayerKind.CONV2D:
            in_ch, out_ch, kh, kw, stride, pad = self.dims
            if len(input_shape) != 3 or input_shape[0] != in_ch:
                raise NetworkConfigError(
                    f"{self.name or kind.value}: entrada {input_shape}, esperado {in_ch} canais"
                )
            try:
                oh = conv_output_size(input_shape[1], kh, stride, pad)
                ow = conv_output_size(input_shape[2], kw, stride, pad)
            except ShapeMismatchError as e:
                raise NetworkConfigError(str(e)) from e
            return (out_ch, oh, ow)
        if kind == LayerKind.MAX_POOL2D:
            size = self.dims[0]
            if len(input_shape) != 3 or input_shape[1] % size or input_shape[2] % size:
                raise NetworkConfigError(
                    f"max_pool2d({size}) exige (C, H, W) divisível, recebeu {input_shape}"
                )
            return (input_shape[0], input_shape[1] // size, input_shape[2] // size)
        if kind == LayerKind.FLATTEN:
            return (int(np.prod(input_shape)),)
        return input_shape

    def to_dict(self) -> Dict[str, Any]:
        """Converte para dicionário"""
        return {
            "kind": self.kind.value,
            "dims": list(self.dims),
            "has_bias": self.has_bias,
            "name": self.name,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LayerSpec":
        """Reconstrói a partir de dicionário"""
        try:
            return cls(
                kind=LayerKind(data["kind"]),
                dims=tuple(int(d) for d in data["dims"]),
                has_bias=bool(data["has_bias"]),
                name=str(data["name"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise NetworkConfigError(f"LayerSpec inválido: {data}") from e

    def __repr__(self) -> str:
        return f"LayerSpec({self.name or '-'}: {self.kind.value}{self.dims})"


def fully_connected(in_features: int, out_features: int, name: str, has_bias: bool = True) -> LayerSpec:
    """Camada densa"""
    return LayerSpec(LayerKind.FULLY_CONNECTED, (in_features, out_features), has_bias, name)


def conv2d_layer(
    in_channels: int,
    out_channels: int,
    kernel: int,
    name: str,
    stride: int = 1,
    pad: int = 0,
    has_bias: bool = True,
) -> LayerSpec:
    """Camada convolucional com kernel quadrado"""
    return LayerSpec(
        LayerKind.CONV2D, (in_channels, out_channels, kernel, kernel, stride, pad), has_bias, name
    )


def relu(name: str = "") -> LayerSpec:
    return LayerSpec(LayerKind.RELU, name=name)


def max_pool2d(size: int = 2, name: str = "") -> LayerSpec:
    return LayerSpec(LayerKind.MAX_POOL2D, (size,), name=name)


def flatten(name: str = "") -> LayerSpec:
    return LayerSpec(LayerKind.FLATTEN, name=name)


def softmax_cross_entropy(name: str = "loss") -> LayerSpec:
    return LayerSpec(LayerKind.SOFTMAX_CROSS_ENTROPY, name=name)


def layer_forward(
    spec: LayerSpec,
    x: Tensor,
    weight: Optional[Tensor] = None,
    bias: Optional[Tensor] = None,
) -> tuple[Tensor, Any]:
    """
    Forward de uma camada (exceto a perda)

    Args:
        spec: Descrição da camada
        x: Entrada com dimensão de batch
        weight: Pesos (camadas parametrizadas)
        bias: Bias opcional

    Returns:
        Tupla (saída, cache para o backward)
    """
    kind = spec.kind
    if kind == LayerKind.FULLY_CONNECTED:
        out = x @ weight
        if bias is not None:
            out = out + bias
        return out, x
    if kind == LayerKind.CONV2D:
        stride, pad = spec.dims[4], spec.dims[5]
        out = conv2d(x, weight, stride, pad)
        if bias is not None:
            out = out + bias[None, :, None, None]
        return out, x
    if kind == LayerKind.RELU:
        mask = x > 0
        return np.where(mask, x, 0.0), mask
    if kind == LayerKind.MAX_POOL2D:
        return _max_pool_forward(x, spec.dims[0])
    if kind == LayerKind.FLATTEN:
        return x.reshape(x.shape[0], -1), x.shape
    raise NetworkConfigError(f"layer_forward não trata {kind.value}")


def layer_backward(
    spec: LayerSpec,
    grad_out: Tensor,
    cache: Any,
    weight: Optional[Tensor] = None,
) -> tuple[Tensor, Optional[Tensor], Optional[Tensor]]:
    """
    Backward de uma camada

    Returns:
        Tupla (grad_entrada, grad_pesos, grad_bias); None onde não se aplica
    """
    kind = spec.kind
    if kind == LayerKind.FULLY_CONNECTED:
        x = cache
        grad_w = x.T @ grad_out
        grad_b = grad_out.sum(axis=0) if spec.has_bias else None
        return grad_out @ weight.T, grad_w, grad_b
    if kind == LayerKind.CONV2D:
        x = cache
        stride, pad = spec.dims[4], spec.dims[5]
        grad_x, grad_w = conv2d_backward(x, weight, grad_out, stride, pad)
        grad_b = grad_out.sum(axis=(0, 2, 3)) if spec.has_bias else None
        return grad_x, grad_w, grad_b
    if kind == LayerKind.RELU:
        return np.where(cache, grad_out, 0.0), None, None
    if kind == LayerKind.MAX_POOL2D:
        return _max_pool_backward(grad_out, cache, spec.dims[0]), None, None
    if kind == LayerKind.FLATTEN:
        return grad_out.reshape(cache), None, None
    raise NetworkConfigError(f"layer_backward não trata {kind.value}")


def _max_pool_forward(x: Tensor, size: int) -> tuple[Tensor, Any]:
    n, c, h, w = x.shape
    ho, wo = h // size, w // size
    blocks = (
        x.reshape(n, c, ho, size, wo, size)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, ho, wo, size * size)
    )
    index = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, index[..., None], axis=-1)[..., 0]
    return out, (index, x.shape)


def _max_pool_backward(grad_out: Tensor, cache: Any, size: int) -> Tensor:
    index, shape = cache
    n, c, h, w = shape
    ho, wo = h // size, w // size
    grad_blocks = np.zeros((n, c, ho, wo, size * size), dtype=np.float64)
    np.put_along_axis(grad_blocks, index[..., None], grad_out[..., None], axis=-1)
    return (
        grad_blocks.reshape(n, c, ho, wo, size, size)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, h, w)
    )


def softmax_cross_entropy_forward(logits: Tensor, labels: np.ndarray) -> tuple[float, Tensor]:
    """
    Entropia cruzada média sobre o batch

    Returns:
        Tupla (perda média, gradiente em relação aos logits)
    """
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_norm[:, None]
    loss = -float(log_probs[np.arange(n), labels].mean())
    grad = np.exp(log_probs)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n
