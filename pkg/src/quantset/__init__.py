"""
Quantset Module

Codebooks de baixa precisão e o passo de projeção: V_i = W_i + λ_i é
levado ao ponto mais próximo de C_i = α_i·A por minimização alternada
em (α_i, Q_i).
"""

from .codebook import (
    MAX_POW2_SHIFT,
    CodebookViolationError,
    DegenerateCodesError,
    QuantKind,
    QuantizationSet,
    QuantizedLayer,
    nearest_level,
    nearest_levels,
)
from .projection import (
    DEFAULT_MAX_ITERS,
    ProjectionTrace,
    alpha_update,
    default_alpha,
    iterative_quantize,
    project_quantize,
    projection_objective,
)
from .policy import (
    FullPrecisionLayer,
    Int8Layer,
    LayerPolicy,
    PolicyKind,
    ProjectedLayer,
    apply_layer_policy,
    apply_layer_policy_traced,
    int8_quantize,
    layer_scale,
    project_state,
)

__all__ = [
    "MAX_POW2_SHIFT",
    "CodebookViolationError",
    "DegenerateCodesError",
    "QuantKind",
    "QuantizationSet",
    "QuantizedLayer",
    "nearest_level",
    "nearest_levels",
    "DEFAULT_MAX_ITERS",
    "ProjectionTrace",
    "alpha_update",
    "default_alpha",
    "iterative_quantize",
    "project_quantize",
    "projection_objective",
    "FullPrecisionLayer",
    "Int8Layer",
    "LayerPolicy",
    "PolicyKind",
    "ProjectedLayer",
    "apply_layer_policy",
    "apply_layer_policy_traced",
    "int8_quantize",
    "layer_scale",
    "project_state",
]
