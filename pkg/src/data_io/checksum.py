"""
Registro de checksums dos arquivos de dados

Na primeira ingestão grava tamanho, soma dos bytes de payload e SHA3-256
de cada arquivo IDX em <data_dir>/checksums.json; cargas seguintes são
conferidas contra esse registro.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict

import numpy as np

logger = logging.getLogger(__name__)

LEDGER_NAME = "checksums.json"


class ChecksumMismatchError(ValueError):
    """Arquivo de dados difere do registrado"""


def file_fingerprint(raw: bytes, payload: np.ndarray) -> Dict[str, Any]:
    """
    Impressão digital de um arquivo IDX decodificado

    Args:
        raw: Bytes descomprimidos
        payload: Dados uint8 decodificados
    """
    h = hashlib.sha3_256()
    h.update(b"LBADMM_IDX")
    h.update(raw)
    return {
        "size": len(raw),
        "payload_sum": int(payload.sum(dtype=np.int64)),
        "sha3_256": h.hexdigest(),
    }


def load_ledger(data_dir: Path) -> Dict[str, Dict[str, Any]]:
    path = Path(data_dir) / LEDGER_NAME
    if not path.exists():
        return {}
    with open(path, "r") as f:
        return json.load(f)


def verify_or_record(data_dir: Path, filename: str, fingerprint: Dict[str, Any]) -> bool:
    """
    Confere o arquivo contra o registro, gravando-o se ausente

    Returns:
        True se foi gravado agora, False se já existia e confere

    Raises:
        ChecksumMismatchError: Se diferir do registro
    """
    ledger = load_ledger(data_dir)
    recorded = ledger.get(filename)
    if recorded is not None:
        if recorded != fingerprint:
            raise ChecksumMismatchError(
                f"{filename}: checksum {fingerprint['sha3_256'][:16]}… difere do registrado "
                f"{recorded.get('sha3_256', '?')[:16]}…"
            )
        return False

    ledger[filename] = fingerprint
    try:
        with open(Path(data_dir) / LEDGER_NAME, "w") as f:
            json.dump(ledger, f, indent=2, sort_keys=True)
    except OSError as e:
        logger.warning("não foi possível gravar %s: %s", LEDGER_NAME, e)
        return False
    logger.info("checksum de %s registrado", filename)
    return True
