"""
Empacotamento de códigos em bits_per_weight bits

Cada código vira seu índice no alfabeto ordenado, escrito MSB primeiro;
o último byte é completado com zeros.
"""

import math

import numpy as np

from quantset import CodebookViolationError, QuantizationSet


def packed_size(count: int, bits: int) -> int:
    """Bytes para count códigos de bits bits"""
    return math.ceil(count * bits / 8)


def pack_codes(codes: np.ndarray, qset: QuantizationSet) -> bytes:
    """
    Empacota códigos do alfabeto

    Raises:
        CodebookViolationError: Código fora do alfabeto
    """
    flat = np.asarray(codes).ravel().astype(np.int64)
    alphabet = qset.alphabet
    idx = np.searchsorted(alphabet, flat)
    idx = np.minimum(idx, len(alphabet) - 1)
    if flat.size and not np.array_equal(alphabet[idx], flat):
        raise CodebookViolationError(f"Código fora do alfabeto {qset.name}")
    bits = qset.bits_per_weight
    shifts = np.arange(bits - 1, -1, -1)
    bit_matrix = ((idx[:, None] >> shifts) & 1).astype(np.uint8)
    return np.packbits(bit_matrix.ravel()).tobytes()


def unpack_codes(data: bytes, qset: QuantizationSet, count: int) -> np.ndarray:
    """
    Desempacota count códigos

    Raises:
        CodebookViolationError: Índice além do alfabeto
        ValueError: Tamanho incompatível ou bits de preenchimento não nulos
    """
    bits = qset.bits_per_weight
    if len(data) != packed_size(count, bits):
        raise ValueError(
            f"Payload empacotado com {len(data)} bytes, esperado {packed_size(count, bits)}"
        )
    stream = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    if stream[count * bits:].any():
        raise ValueError("Bits de preenchimento não nulos")
    weights = 1 << np.arange(bits - 1, -1, -1)
    idx = stream[:count * bits].reshape(count, bits).astype(np.int64) @ weights
    if idx.size and idx.max() >= len(qset.alphabet):
        raise CodebookViolationError(f"Índice {int(idx.max())} fora do alfabeto {qset.name}")
    return qset.alphabet[idx].astype(np.int8)
