"""
Configuração do treino ADMM

Valores padrão de escala de bancada (MNIST); nenhum deles é prescrito
pelo método, todos são registrados no effective_config.json da execução.
"""

from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Any, Dict, Optional

from quantset import LayerPolicy


class AdmmConfigError(ValueError):
    """Parâmetro de ADMM inválido"""


class DivergenceError(RuntimeError):
    """Perda não finita durante o passo proximal"""


class ProxMethod(Enum):
    """Resolvedor do passo proximal"""
    EXTRAGRADIENT = "extragradient"
    GRADIENT = "gradient"


@dataclass
class AdmmConfig:
    """
    Parâmetros do laço ADMM

    ρ cresce geometricamente (rho_growth a cada rho_growth_every rodadas,
    limitado por rho_max); β_p e β_c decaem em degraus por rodada.
    """

    rho: float = 1e-2
    """Penalidade do Lagrangiano aumentado"""

    rho_growth: float = 1.5
    rho_growth_every: int = 10
    rho_max: float = 1.0

    beta_p: float = 0.01
    """Taxa da etapa de predição"""

    beta_c: float = 0.01
    """Taxa da etapa de correção"""

    beta_decay: float = 1.0
    beta_decay_every: int = 10

    proximal_steps_per_round: Optional[int] = None
    """Iterações proximais por rodada (None: uma época de minibatches)"""

    max_rounds: int = 30
    """Rodadas ADMM (0: apenas a projeção inicial)"""

    primal_tolerance: float = 1e-2
    """Limite para ‖W − G‖ / ‖W‖"""

    patience: int = 3
    """Rodadas consecutivas abaixo da tolerância para parar"""

    prox_method: ProxMethod = ProxMethod.EXTRAGRADIENT
    projection_max_iters: int = 20
    batch_size: int = 64
    seed: int = 0

    default_set: str = "ternary"
    """Política das camadas sem seletor específico"""

    layer_policy: Dict[str, str] = field(default_factory=dict)
    """Seletor → política (ex.: {"fc_last": "full_precision", "1x1": "int8"})"""

    def __post_init__(self) -> None:
        if isinstance(self.prox_method, str):
            try:
                self.prox_method = ProxMethod(self.prox_method)
            except ValueError as e:
                raise AdmmConfigError(f"prox_method desconhecido: {self.prox_method}") from e
        self.validate()

    def validate(self) -> None:
        """
        Valida invariantes

        Raises:
            AdmmConfigError: Na primeira violação encontrada
        """
        positive = {
            "rho": self.rho,
            "beta_p": self.beta_p,
            "beta_c": self.beta_c,
            "primal_tolerance": self.primal_tolerance,
            "rho_max": self.rho_max,
        }
        for name, value in positive.items():
            if not value > 0:
                raise AdmmConfigError(f"{name} deve ser positivo: {value}")
        if self.rho_growth < 1.0:
            raise AdmmConfigError(f"rho_growth deve ser >= 1: {self.rho_growth}")
        if not 0 < self.beta_decay <= 1.0:
            raise AdmmConfigError(f"beta_decay deve estar em (0, 1]: {self.beta_decay}")
        for name in ("rho_growth_every", "beta_decay_every", "patience", "batch_size",
                     "projection_max_iters"):
            if getattr(self, name) < 1:
                raise AdmmConfigError(f"{name} deve ser >= 1: {getattr(self, name)}")
        if self.proximal_steps_per_round is not None and self.proximal_steps_per_round < 1:
            raise AdmmConfigError(
                f"proximal_steps_per_round deve ser >= 1: {self.proximal_steps_per_round}"
            )
        if self.max_rounds < 0:
            raise AdmmConfigError(f"max_rounds não pode ser negativo: {self.max_rounds}")
        if self.seed < 0:
            raise AdmmConfigError(f"seed deve ser não negativa: {self.seed}")
        for policy in [self.default_set, *self.layer_policy.values()]:
            try:
                LayerPolicy.parse(policy)
            except ValueError as e:
                raise AdmmConfigError(str(e)) from e

    def betas(self, round_index: int) -> tuple[float, float]:
        """(β_p, β_c) da rodada (1-indexada)"""
        factor = self.beta_decay ** ((round_index - 1) // self.beta_decay_every)
        return self.beta_p * factor, self.beta_c * factor

    def next_rho(self, rho: float, round_index: int) -> float:
        """ρ após a rodada round_index"""
        if round_index % self.rho_growth_every == 0:
            return min(rho * self.rho_growth, max(self.rho_max, rho))
        return rho

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["prox_method"] = self.prox_method.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AdmmConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise AdmmConfigError(f"Chaves desconhecidas: {sorted(unknown)}")
        return cls(**data)
