"""
Configuração de execução

Precedência: flags > arquivo JSON > padrões. Chaves desconhecidas são
rejeitadas. A configuração efetiva é gravada em effective_config.json
(com digest SHA3-256 ao lado) e pode ser passada de volta em --config.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional, Union

from admm import AdmmConfig, AdmmConfigError
from network import ARCHITECTURES

logger = logging.getLogger(__name__)

EFFECTIVE_CONFIG = "effective_config.json"
EFFECTIVE_DIGEST = "effective_config.sha3"


class ConfigError(ValueError):
    """Configuração inválida ou incompleta"""


@dataclass
class RunConfig:
    """Parâmetros de uma execução da CLI"""

    arch: str = "mlp"
    data_dir: str = "data/mnist"
    out: str = "runs/default"
    model: Optional[str] = None
    """Modelo de entrada (quantize, eval, export, inspect)"""

    seed: int = 0
    epochs: int = 10
    lr: float = 0.05
    lr_decay: float = 0.5
    lr_decay_every: int = 5
    momentum: float = 0.9
    batch_size: int = 64
    train_limit: Optional[int] = None
    """Usa só as primeiras N amostras de treino"""

    test_limit: Optional[int] = None
    encoding: str = "int8"
    admm: Dict[str, Any] = field(default_factory=dict)
    """Campos de AdmmConfig (seed vem de RunConfig.seed)"""

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.arch not in ARCHITECTURES:
            raise ConfigError(f"arch deve ser um de {sorted(ARCHITECTURES)}: {self.arch}")
        if self.seed < 0:
            raise ConfigError(f"seed deve ser não negativa: {self.seed}")
        if self.epochs < 0:
            raise ConfigError(f"epochs não pode ser negativo: {self.epochs}")
        if not self.lr > 0 or not 0 < self.lr_decay <= 1 or self.lr_decay_every < 1:
            raise ConfigError("lr, lr_decay e lr_decay_every inválidos")
        if not 0 <= self.momentum < 1:
            raise ConfigError(f"momentum deve estar em [0, 1): {self.momentum}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size deve ser >= 1: {self.batch_size}")
        for name in ("train_limit", "test_limit"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ConfigError(f"{name} não pode ser negativo: {value}")
        if self.encoding not in ("int8", "packed"):
            raise ConfigError(f"encoding deve ser int8 ou packed: {self.encoding}")
        if "seed" in self.admm:
            raise ConfigError("admm.seed não é configurável; use seed")
        self.admm_config()

    def admm_config(self, **defaults: Any) -> AdmmConfig:
        """
        AdmmConfig da execução

        Args:
            defaults: Valores usados quando a chave não foi dada (ex.: β do pré-treino)
        """
        data = {**defaults, **self.admm, "seed": self.seed}
        data.setdefault("batch_size", self.batch_size)
        try:
            return AdmmConfig.from_dict(data)
        except AdmmConfigError as e:
            raise ConfigError(f"admm: {e}") from e
        except TypeError as e:
            raise ConfigError(f"admm: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Chaves desconhecidas: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(str(e)) from e


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Lê um arquivo JSON de configuração"""
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"Arquivo de configuração não encontrado: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"JSON inválido em {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: esperado objeto JSON")
    return data


def merge_config(
    file_data: Optional[Dict[str, Any]],
    flags: Dict[str, Any],
) -> RunConfig:
    """
    Combina padrões, arquivo e flags

    Args:
        file_data: Conteúdo do --config (ou None)
        flags: Valores dados na linha de comando; "admm" é mesclado chave a chave

    Returns:
        RunConfig validado
    """
    data: Dict[str, Any] = dict(file_data or {})
    admm = dict(data.get("admm") or {})
    for key, value in flags.items():
        if key == "admm":
            layer_policy = value.pop("layer_policy", None)
            admm.update(value)
            if layer_policy:
                admm["layer_policy"] = {**admm.get("layer_policy", {}), **layer_policy}
        else:
            data[key] = value
    if admm:
        data["admm"] = admm
    return RunConfig.from_dict(data)


def canonical_bytes(config: RunConfig) -> bytes:
    return (json.dumps(config.to_dict(), sort_keys=True, indent=2) + "\n").encode()


def config_digest(config: RunConfig) -> str:
    h = hashlib.sha3_256()
    h.update(b"LBADMM_CONFIG")
    h.update(canonical_bytes(config))
    return h.hexdigest()


def echo_config(config: RunConfig, out_dir: Union[str, Path]) -> str:
    """
    Grava effective_config.json e o digest

    Returns:
        Digest SHA3-256 (hex)
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / EFFECTIVE_CONFIG).write_bytes(canonical_bytes(config))
    digest = config_digest(config)
    (out_dir / EFFECTIVE_DIGEST).write_text(digest + "\n")
    logger.info("configuração efetiva %s (sha3 %s…)", out_dir / EFFECTIVE_CONFIG, digest[:16])
    return digest
