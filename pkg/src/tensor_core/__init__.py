"""
Tensor Core Module

Aritmética de tensores densos (float64, row-major) usada por todos os
demais módulos: soma, escala, produto interno, produto matricial e
convolução 2-D com seus gradientes.
"""

from .ops import (
    Tensor,
    ShapeMismatchError,
    as_tensor,
    zeros,
    elementwise_add,
    scale,
    dot,
    matmul,
    conv2d,
    conv2d_backward,
    conv_output_size,
    extract_patches,
)
from .rng import substream, stream_key

__all__ = [
    "Tensor",
    "ShapeMismatchError",
    "as_tensor",
    "zeros",
    "elementwise_add",
    "scale",
    "dot",
    "matmul",
    "conv2d",
    "conv2d_backward",
    "conv_output_size",
    "extract_patches",
    "substream",
    "stream_key",
]
