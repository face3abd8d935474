"""
Model IO Module

Serialização bit-exata de modelos (container LBADMM01) e inferência
quantizada por somas e deslocamentos.
"""

from .container import (
    MAGIC,
    ModelFormatError,
    ModelLengthError,
    ModelVersionError,
    QuantizedModel,
    decode,
    encode,
    load,
    save,
)
from .packing import pack_codes, packed_size, unpack_codes
from .inference import CountingKernel, ShiftAddKernel, quantized_forward, shift_add_matmul
from .report import LayerReport, format_report, inspect_model

__all__ = [
    "MAGIC",
    "ModelFormatError",
    "ModelLengthError",
    "ModelVersionError",
    "QuantizedModel",
    "decode",
    "encode",
    "load",
    "save",
    "pack_codes",
    "packed_size",
    "unpack_codes",
    "CountingKernel",
    "ShiftAddKernel",
    "quantized_forward",
    "shift_add_matmul",
    "LayerReport",
    "format_report",
    "inspect_model",
]
