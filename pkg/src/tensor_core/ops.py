"""
Operações de tensor denso

Todo o laboratório usa ``numpy.ndarray`` float64, C-contíguo, como tensor.
As funções deste módulo validam formas e nunca modificam as entradas.

Pesos de camadas são vistos como vetores planos (row-major) na álgebra
do ADMM: ``w.ravel()`` é o vetor d_i-dimensional da camada i.
"""

from typing import Sequence

import numpy as np
import numpy.typing as npt

Tensor = npt.NDArray[np.float64]
"""Tensor denso de precisão dupla"""


class ShapeMismatchError(ValueError):
    """Formas incompatíveis entre operandos"""


def as_tensor(data: npt.ArrayLike, shape: Sequence[int] | None = None) -> Tensor:
    """
    Constrói tensor float64 contíguo

    Args:
        data: Dados (lista, escalar ou array)
        shape: Forma desejada (opcional); o número de elementos deve bater

    Returns:
        Cópia float64 dos dados
    """
    array = np.array(data, dtype=np.float64, copy=True, order="C")
    if shape is not None:
        expected = int(np.prod(shape)) if len(shape) > 0 else 1
        if array.size != expected:
            raise ShapeMismatchError(
                f"Dados com {array.size} elementos não cabem na forma {tuple(shape)}"
            )
        array = array.reshape(tuple(shape))
    return array


def zeros(shape: Sequence[int]) -> Tensor:
    """Tensor de zeros"""
    return np.zeros(tuple(shape), dtype=np.float64)


def _require_same_shape(a: np.ndarray, b: np.ndarray, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{op}: formas diferentes {a.shape} e {b.shape}")


def elementwise_add(a: Tensor, b: Tensor) -> Tensor:
    """Soma elemento a elemento de tensores de mesma forma"""
    _require_same_shape(a, b, "elementwise_add")
    return np.add(a, b, dtype=np.float64)


def scale(a: Tensor, c: float) -> Tensor:
    """Multiplica todas as entradas por um escalar"""
    return np.multiply(a, float(c), dtype=np.float64)


def dot(a: Tensor, b: Tensor) -> float:
    """Produto interno dos tensores vistos como vetores planos"""
    _require_same_shape(a, b, "dot")
    return float(np.dot(np.ravel(a), np.ravel(b)))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Produto matricial 2-D

    Raises:
        ShapeMismatchError: Se a.shape[1] != b.shape[0] ou operandos não forem 2-D
    """
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeMismatchError(f"matmul exige matrizes 2-D, recebeu {a.ndim}-D e {b.ndim}-D")
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(f"matmul: {a.shape} @ {b.shape} não conformes")
    return np.matmul(a, b, dtype=np.float64)


def conv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    """Tamanho espacial da saída de uma convolução válida"""
    out = (size + 2 * pad - kernel) // stride + 1
    if out <= 0:
        raise ShapeMismatchError(
            f"Kernel {kernel} (stride {stride}, pad {pad}) maior que entrada {size}"
        )
    return out


def extract_patches(x: Tensor, kh: int, kw: int, stride: int = 1, pad: int = 0) -> np.ndarray:
    """
    Janelas deslizantes de uma entrada (N, C, H, W)

    Returns:
        Visão somente-leitura (N, C, OH, OW, kh, kw)
    """
    if x.ndim != 4:
        raise ShapeMismatchError(f"Entrada de convolução deve ser 4-D, recebeu {x.shape}")
    if stride < 1 or pad < 0:
        raise ValueError(f"stride={stride} e pad={pad} inválidos")
    conv_output_size(x.shape[2], kh, stride, pad)
    conv_output_size(x.shape[3], kw, stride, pad)
    if pad > 0:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    return windows[:, :, ::stride, ::stride]


def conv2d(x: Tensor, kernel: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    """
    Correlação cruzada 2-D (convenção das redes convolucionais)

    Aceita (N, C, H, W) com kernel (F, C, kh, kw), devolvendo (N, F, OH, OW),
    ou a forma abreviada 2-D × 2-D, devolvendo matriz (OH, OW).

    Args:
        x: Entrada
        kernel: Filtros
        stride: Passo
        pad: Preenchimento com zeros em cada borda

    Returns:
        Mapa de saída
    """
    if x.ndim == 2 and kernel.ndim == 2:
        return conv2d(x[None, None], kernel[None, None], stride, pad)[0, 0]
    if kernel.ndim != 4:
        raise ShapeMismatchError(f"Kernel deve ser 4-D (F, C, kh, kw), recebeu {kernel.shape}")
    if x.ndim != 4 or x.shape[1] != kernel.shape[1]:
        raise ShapeMismatchError(
            f"Canais da entrada {x.shape} não batem com o kernel {kernel.shape}"
        )
    patches = extract_patches(x, kernel.shape[2], kernel.shape[3], stride, pad)
    # (N, OH, OW, F) -> (N, F, OH, OW)
    out = np.tensordot(patches, kernel, axes=([1, 4, 5], [1, 2, 3]))
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2), dtype=np.float64)


def conv2d_backward(
    x: Tensor,
    kernel: Tensor,
    grad_out: Tensor,
    stride: int = 1,
    pad: int = 0,
) -> tuple[Tensor, Tensor]:
    """
    Gradientes de conv2d em relação à entrada e ao kernel

    Args:
        x: Entrada do forward (N, C, H, W)
        kernel: Kernel do forward (F, C, kh, kw)
        grad_out: Gradiente da saída (N, F, OH, OW)

    Returns:
        Tupla (grad_x, grad_kernel)
    """
    kh, kw = kernel.shape[2], kernel.shape[3]
    patches = extract_patches(x, kh, kw, stride, pad)
    n, _, oh, ow = grad_out.shape
    if patches.shape[2:4] != (oh, ow) or grad_out.shape[1] != kernel.shape[0]:
        raise ShapeMismatchError(
            f"Gradiente {grad_out.shape} incompatível com saída de conv {patches.shape[:4]}"
        )

    grad_kernel = np.tensordot(grad_out, patches, axes=([0, 2, 3], [0, 2, 3]))

    # (N, C, OH, OW, kh, kw)
    grad_cols = np.einsum("nfhw,fcij->nchwij", grad_out, kernel, optimize=True)
    padded = np.zeros(
        (n, x.shape[1], x.shape[2] + 2 * pad, x.shape[3] + 2 * pad), dtype=np.float64
    )
    for i in range(kh):
        for j in range(kw):
            padded[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride] += grad_cols[
                :, :, :, :, i, j
            ]
    grad_x = padded[:, :, pad:pad + x.shape[2], pad:pad + x.shape[3]]
    return np.ascontiguousarray(grad_x), np.ascontiguousarray(grad_kernel)
