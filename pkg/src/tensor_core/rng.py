"""
Subfluxos aleatórios nomeados

Toda a aleatoriedade de uma execução nasce de uma única seed. Cada uso
(inicialização, embaralhamento, avaliação) recebe um subfluxo próprio,
de modo que ablações mudam um fator por vez.
"""

import hashlib

import numpy as np


def stream_key(name: str) -> int:
    """
    Deriva chave inteira estável para um nome de subfluxo

    Args:
        name: Nome do subfluxo (ex.: "init", "shuffle")

    Returns:
        Inteiro de 32 bits derivado de SHA3-256 do nome
    """
    h = hashlib.sha3_256()
    h.update(b"LBADMM_STREAM")
    h.update(name.encode())
    return int.from_bytes(h.digest()[:4], "big")


def substream(seed: int, name: str, *keys: int) -> np.random.Generator:
    """
    Gerador determinístico para (seed, nome, chaves extras)

    Args:
        seed: Seed global da execução
        name: Nome do subfluxo
        keys: Índices adicionais (ex.: número da época)

    Returns:
        numpy Generator independente dos demais subfluxos
    """
    if seed < 0:
        raise ValueError(f"Seed deve ser não negativa: {seed}")
    sequence = np.random.SeedSequence(seed, spawn_key=(stream_key(name), *keys))
    return np.random.default_rng(sequence)
