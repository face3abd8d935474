"""
ADMM Module

Laço externo: passo proximal por extragradiente, projeção por camada
no codebook e atualização dual, com critérios de parada e agenda de ρ.
"""

from .config import AdmmConfig, AdmmConfigError, DivergenceError, ProxMethod
from .state import ROUND_FIELDS, AdmmState, RoundRecord
from .objectives import NetworkObjective, Objective, QuadraticObjective
from .extragradient import (
    SaddleProblem,
    compare_methods,
    extragradient_step,
    gradient_step,
    iterations_to_tolerance,
)
from .trainer import (
    AdmmResult,
    admm_train,
    augmented_loss,
    dual_update,
    projection_step,
    proximal_step,
    resolve_layer_policies,
    run_admm,
)
from .history import read_csv, round_fieldnames, write_csv, write_history_csv

__all__ = [
    "AdmmConfig",
    "AdmmConfigError",
    "DivergenceError",
    "ProxMethod",
    "ROUND_FIELDS",
    "AdmmState",
    "RoundRecord",
    "NetworkObjective",
    "Objective",
    "QuadraticObjective",
    "SaddleProblem",
    "compare_methods",
    "extragradient_step",
    "gradient_step",
    "iterations_to_tolerance",
    "AdmmResult",
    "admm_train",
    "augmented_loss",
    "dual_update",
    "projection_step",
    "proximal_step",
    "resolve_layer_policies",
    "run_admm",
    "read_csv",
    "round_fieldnames",
    "write_csv",
    "write_history_csv",
]
