"""
Subcomandos: pretrain, quantize, eval, export, inspect

Cada comando recebe o RunConfig efetivo e devolve um dicionário de
resumo, impresso pela CLI como uma linha JSON.
"""

import logging
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

from admm import admm_train, write_csv, write_history_csv
from data_io import Dataset, batches, load_mnist
from model_io import (
    QuantizedModel,
    format_report,
    inspect_model,
    load,
    quantized_forward,
    save,
)
from network import EPOCH_FIELDS, StepDecay, build_network, evaluate, evaluate_logits, pretrain
from tensor_core import substream
from .run_config import ConfigError, RunConfig, echo_config

logger = logging.getLogger(__name__)

PRETRAIN_MODEL = "pretrained.lbadmm"
QUANTIZED_MODEL = "quantized.lbadmm"
PRETRAIN_CSV = "pretrain.csv"
ROUNDS_CSV = "rounds.csv"


def _require_model(config: RunConfig) -> Path:
    if config.model is None:
        raise ConfigError("Este comando exige --model")
    path = Path(config.model)
    if not path.is_file():
        raise ConfigError(f"Modelo não encontrado: {path}")
    return path


def _require_data_dir(config: RunConfig) -> Path:
    path = Path(config.data_dir)
    if not path.is_dir():
        raise ConfigError(f"Diretório de dados não encontrado: {path}")
    return path


def _load_data(config: RunConfig) -> Tuple[Dataset, Dataset]:
    train, test = load_mnist(config.data_dir)
    if config.train_limit is not None:
        train = train.subset(config.train_limit)
    if config.test_limit is not None:
        test = test.subset(config.test_limit)
    return train, test


def cmd_pretrain(config: RunConfig) -> Dict[str, Any]:
    """Treina a referência em precisão plena e grava modelo + CSV por época"""
    _require_data_dir(config)
    out = Path(config.out)
    echo_config(config, out)
    train, test = _load_data(config)

    net = build_network(config.arch, substream(config.seed, "init"))
    schedule = StepDecay(config.lr, config.lr_decay, config.lr_decay_every)
    result = pretrain(
        net,
        lambda epoch: batches(train, config.batch_size, config.seed, epoch),
        config.epochs,
        schedule,
        lambda n: evaluate(n, test.images, test.labels),
        config.momentum,
    )

    model = QuantizedModel.from_network(result.network, {
        "stage": "pretrain",
        "arch": config.arch,
        "seed": config.seed,
        "epochs": config.epochs,
        "final_lr": result.final_lr,
        "data_mean": train.mean,
    })
    save(model, out / PRETRAIN_MODEL)
    write_csv(out / PRETRAIN_CSV, [r.to_row() for r in result.history], EPOCH_FIELDS)
    final = result.history[-1]
    return {
        "command": "pretrain",
        "model": str(out / PRETRAIN_MODEL),
        "test_top1": final.test_top1,
        "test_top5": final.test_top5,
    }


def cmd_quantize(config: RunConfig) -> Dict[str, Any]:
    """Roda o ADMM sobre o modelo pré-treinado (--rounds 0: só a projeção)"""
    model_path = _require_model(config)
    _require_data_dir(config)
    pretrained = load(model_path)

    final_lr = pretrained.metadata.get("final_lr")
    for key in ("beta_p", "beta_c"):
        if key not in config.admm and isinstance(final_lr, (int, float)):
            config.admm[key] = float(final_lr)
    admm_config = config.admm_config()

    out = Path(config.out)
    digest = echo_config(config, out)
    train, test = _load_data(config)

    model, history = admm_train(pretrained, admm_config, train, test)
    model.metadata["config_sha3"] = digest
    save(model, out / QUANTIZED_MODEL, config.encoding)
    write_history_csv(out / ROUNDS_CSV, history)
    final = history[-1]
    return {
        "command": "quantize",
        "model": str(out / QUANTIZED_MODEL),
        "rounds": model.metadata["rounds"],
        "stop_reason": model.metadata["stop_reason"],
        "eval_accuracy": final.eval_accuracy,
        "relative_residual": final.relative_residual,
    }


def cmd_eval(config: RunConfig, path: str = "float") -> Dict[str, Any]:
    """
    Avaliação single-view no conjunto de teste

    Args:
        path: "float" (pesos realizados) ou "shiftadd" (quantized_forward)
    """
    model_path = _require_model(config)
    _require_data_dir(config)
    model = load(model_path)
    _, test = _load_data(config)

    logits_fn: Callable = model.logits
    if path == "shiftadd":
        logits_fn = lambda x: quantized_forward(model, x)  # noqa: E731
    elif path != "float":
        raise ConfigError(f"Caminho de avaliação desconhecido: {path}")
    report = evaluate_logits(logits_fn, test.images, test.labels)
    return {"command": "eval", "path": path, **report.to_dict()}


def cmd_export(config: RunConfig, output: Optional[str] = None) -> Dict[str, Any]:
    """Regrava o modelo com a codificação pedida"""
    model_path = _require_model(config)
    model = load(model_path)
    target = Path(output) if output else Path(config.out) / f"model_{config.encoding}.lbadmm"
    target.parent.mkdir(parents=True, exist_ok=True)
    size = save(model, target, config.encoding)
    return {"command": "export", "model": str(target), "encoding": config.encoding, "bytes": size}


def cmd_inspect(config: RunConfig) -> Dict[str, Any]:
    """Relatório por camada: tipo, alfabeto, α, fração de zeros, tamanho empacotado"""
    model = load(_require_model(config))
    reports = inspect_model(model)
    logger.info("\n%s", format_report(reports))
    return {"command": "inspect", "layers": [r.to_dict() for r in reports]}
