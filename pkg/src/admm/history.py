"""
Escrita dos históricos em CSV

Cabeçalho + uma linha por rodada (ou época). Floats em repr (ponto
decimal, precisão completa), None como campo vazio; mesma entrada,
mesmos bytes.
"""

import csv
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from .state import ROUND_FIELDS, RoundRecord


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(
    path: Union[str, Path],
    rows: Iterable[Dict[str, Any]],
    fieldnames: Sequence[str],
) -> None:
    """
    Grava linhas com as colunas dadas

    Colunas ausentes numa linha ficam vazias; chaves fora de fieldnames
    são rejeitadas.
    """
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            extra = set(row) - set(fieldnames)
            if extra:
                raise ValueError(f"Colunas inesperadas: {sorted(extra)}")
            writer.writerow([_cell(row.get(name)) for name in fieldnames])


def round_fieldnames(records: Sequence[RoundRecord], names: Optional[Sequence[str]] = None) -> List[str]:
    """Colunas fixas seguidas de alpha_<camada>"""
    if names is None:
        names = list(records[0].alphas) if records else []
    return ROUND_FIELDS + [f"alpha_{n}" for n in names]


def write_history_csv(path: Union[str, Path], records: Sequence[RoundRecord]) -> None:
    """Histórico ADMM por rodada"""
    write_csv(path, [r.to_row() for r in records], round_fieldnames(records))


def read_csv(path: Union[str, Path]) -> List[Dict[str, str]]:
    """Lê um CSV gravado por write_csv"""
    with open(path, "r", newline="") as f:
        return list(csv.DictReader(f))
