"""
Ponto de entrada da CLI lbadmm

    lbadmm pretrain --arch mlp --epochs 10 --seed 7 --out runs/mlp
    lbadmm quantize --model runs/mlp/pretrained.lbadmm --set ternary --out runs/mlp_t
    lbadmm eval     --model runs/mlp_t/quantized.lbadmm
    lbadmm export   --model runs/mlp_t/quantized.lbadmm --encoding packed
    lbadmm inspect  --model runs/mlp_t/quantized.lbadmm

Saída: uma linha JSON no stdout. Em falha, uma linha JSON
{"error": ..., "message": ...} no stderr e código 2 (configuração) ou 1.
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from admm import AdmmConfigError
from .commands import cmd_eval, cmd_export, cmd_inspect, cmd_pretrain, cmd_quantize
from .run_config import ConfigError, load_config_file, merge_config

logger = logging.getLogger(__name__)

# flag -> campo de RunConfig
RUN_FLAGS = (
    "arch", "data_dir", "out", "model", "seed", "epochs", "lr", "lr_decay",
    "lr_decay_every", "momentum", "batch_size", "train_limit", "test_limit", "encoding",
)
# flag -> campo de AdmmConfig
ADMM_FLAGS = {
    "set": "default_set",
    "rho": "rho",
    "rounds": "max_rounds",
    "beta": None,
    "steps_per_round": "proximal_steps_per_round",
    "prox_method": "prox_method",
    "tolerance": "primal_tolerance",
}


def _parse_layer_policy(items: List[str]) -> Dict[str, str]:
    policy: Dict[str, str] = {}
    for item in items:
        selector, sep, value = item.partition("=")
        if not sep or not selector or not value:
            raise ConfigError(f"--layer-policy espera seletor=política: {item!r}")
        policy[selector] = value
    return policy


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Arquivo JSON de configuração")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="Diretório de saída")
    parser.add_argument("--data-dir", dest="data_dir", help="Diretório com os arquivos IDX")
    parser.add_argument("--model", help="Modelo de entrada (.lbadmm)")
    parser.add_argument("--train-limit", dest="train_limit", type=int)
    parser.add_argument("--test-limit", dest="test_limit", type=int)
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lbadmm",
        description="Quantização de redes em codebooks de poucos bits por ADMM",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pretrain", help="Treino de referência em precisão plena")
    _common(p)
    p.add_argument("--arch", choices=["mlp", "cnn"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--lr-decay", dest="lr_decay", type=float)
    p.add_argument("--lr-decay-every", dest="lr_decay_every", type=int)
    p.add_argument("--momentum", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)

    q = sub.add_parser("quantize", help="Quantização ADMM do modelo pré-treinado")
    _common(q)
    q.add_argument("--set", help="binary | ternary | pow2:N")
    q.add_argument("--layer-policy", dest="layer_policy", action="append", default=[],
                   metavar="SELETOR=POLÍTICA",
                   help="Ex.: 1x1=int8, fc_last=full_precision (repetível)")
    q.add_argument("--rho", type=float)
    q.add_argument("--rounds", type=int)
    q.add_argument("--beta", type=float, help="β_p = β_c")
    q.add_argument("--steps-per-round", dest="steps_per_round", type=int)
    q.add_argument("--prox-method", dest="prox_method", choices=["extragradient", "gradient"])
    q.add_argument("--tolerance", type=float)
    q.add_argument("--batch-size", dest="batch_size", type=int)
    q.add_argument("--encoding", choices=["int8", "packed"])

    e = sub.add_parser("eval", help="Acurácia top-1/top-5 no teste")
    _common(e)
    e.add_argument("--path", choices=["float", "shiftadd"], default="float")

    x = sub.add_parser("export", help="Regrava o modelo com outra codificação")
    _common(x)
    x.add_argument("--encoding", choices=["int8", "packed"])
    x.add_argument("--output", help="Arquivo de destino")

    i = sub.add_parser("inspect", help="Relatório por camada")
    _common(i)
    i.add_argument("--json", action="store_true", help="Só a linha JSON, sem tabela")
    return parser


def _flags(args: argparse.Namespace) -> Dict[str, Any]:
    values = vars(args)
    flags: Dict[str, Any] = {
        name: values[name] for name in RUN_FLAGS if values.get(name) is not None
    }
    admm: Dict[str, Any] = {}
    for flag, key in ADMM_FLAGS.items():
        value = values.get(flag)
        if value is None:
            continue
        if flag == "beta":
            admm["beta_p"] = admm["beta_c"] = value
        else:
            admm[key] = value
    if values.get("layer_policy"):
        admm["layer_policy"] = _parse_layer_policy(values["layer_policy"])
    if admm:
        flags["admm"] = admm
    return flags


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


def run(args: argparse.Namespace) -> Dict[str, Any]:
    file_data = load_config_file(args.config) if args.config else None
    config = merge_config(file_data, _flags(args))
    if args.command == "pretrain":
        return cmd_pretrain(config)
    if args.command == "quantize":
        return cmd_quantize(config)
    if args.command == "eval":
        return cmd_eval(config, args.path)
    if args.command == "export":
        return cmd_export(config, args.output)
    if args.command == "inspect":
        if args.json:
            logging.getLogger("cli.commands").setLevel(logging.WARNING)
        return cmd_inspect(config)
    raise ConfigError(f"Comando desconhecido: {args.command}")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    try:
        summary = run(args)
    except (ConfigError, AdmmConfigError) as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as e:
        logger.debug("falha", exc_info=True)
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return 1
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
