"""
CLI Module

Subcomandos pretrain, quantize, eval, export e inspect sobre as
bibliotecas network, admm, data_io e model_io.
"""

from .run_config import (
    EFFECTIVE_CONFIG,
    EFFECTIVE_DIGEST,
    ConfigError,
    RunConfig,
    config_digest,
    echo_config,
    load_config_file,
    merge_config,
)
from .commands import (
    PRETRAIN_CSV,
    PRETRAIN_MODEL,
    QUANTIZED_MODEL,
    ROUNDS_CSV,
    cmd_eval,
    cmd_export,
    cmd_inspect,
    cmd_pretrain,
    cmd_quantize,
)

__all__ = [
    "EFFECTIVE_CONFIG",
    "EFFECTIVE_DIGEST",
    "ConfigError",
    "RunConfig",
    "config_digest",
    "echo_config",
    "load_config_file",
    "merge_config",
    "PRETRAIN_CSV",
    "PRETRAIN_MODEL",
    "QUANTIZED_MODEL",
    "ROUNDS_CSV",
    "cmd_eval",
    "cmd_export",
    "cmd_inspect",
    "cmd_pretrain",
    "cmd_quantize",
]
