#!/usr/bin/env python3.11
"""
reproduce.py - Execução de referência no MNIST

Pipeline: build → verify → reproduce
Este script é a terceira etapa.

- Só executa se .verify_passed existir
- Roda pré-treino e quantizações de configs/ com os limiares de
  reproducibility/expected_results.json
- Grava o relatório em artifact/ com o digest das fontes
- Com --record, grava os valores medidos no bloco "reference" de
  expected_results.json
"""

import hashlib
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

# Adiciona src ao path
sys.path.insert(0, str(Path(__file__).parent.absolute() / "src"))

from cli import cmd_pretrain, cmd_quantize, load_config_file, merge_config

BASE = Path(__file__).parent.absolute()
EXPECTED = BASE / "reproducibility" / "expected_results.json"


def check_verify_passed() -> bool:
    """Verifica se .verify_passed existe"""
    return (BASE / ".verify_passed").exists()


def read_verify_stamp() -> dict:
    """Lê carimbo de verificação"""
    with open(BASE / ".verify_passed", "r") as f:
        lines = f.readlines()

    stamp = {}
    for line in lines:
        if ":" in line:
            key, value = line.split(":", 1)
            stamp[key.strip()] = value.strip()

    return stamp


def source_digest() -> str:
    """SHA3-256 das fontes em ordem de caminho"""
    h = hashlib.sha3_256()
    for py_file in sorted((BASE / "src").rglob("*.py")):
        h.update(str(py_file.relative_to(BASE)).encode())
        h.update(py_file.read_bytes())
    return h.hexdigest()


def load_run(config_path: str, data_dir: str, **overrides):
    """RunConfig do arquivo com o diretório de dados do ambiente"""
    return merge_config(load_config_file(BASE / config_path), {"data_dir": data_dir, **overrides})


def main():
    print("=== lowbit-admm-lab Reproduction ===\n")
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    # 1. Verifica carimbo .verify_passed
    print("[1/4] Verificando carimbo de verificação...")
    if not check_verify_passed():
        print("❌ ERRO: .verify_passed não encontrado")
        print("\nPipeline bloqueado: sem verify PASS → sem reproduce")
        print("\nExecute ./verify.sh primeiro")
        sys.exit(1)

    stamp = read_verify_stamp()
    print(f"✓ Verificação passou em {stamp.get('Timestamp', 'unknown')}")

    data_dir = os.environ.get("LBADMM_MNIST_DIR")
    if not data_dir:
        print("❌ ERRO: defina LBADMM_MNIST_DIR com os arquivos IDX do MNIST")
        sys.exit(1)

    with open(EXPECTED, "r") as f:
        expected = json.load(f)
    checks = []
    measured = {}

    # 2. Pré-treino em precisão plena
    print("\n[2/4] Pré-treino em precisão plena...")
    pre_config = load_run(expected["pretrain"]["config"], data_dir)
    pre = cmd_pretrain(pre_config)
    baseline = pre["test_top1"]
    ok = baseline >= expected["pretrain"]["min_test_top1"]
    checks.append({"check": "pretrain_top1", "value": baseline, "passed": ok})
    print(f"{'✓' if ok else '❌'} top-1 = {baseline:.4f} (mínimo {expected['pretrain']['min_test_top1']})")

    # 3. Quantizações ADMM
    print("\n[3/4] Quantizações ADMM...")
    residual = expected["residual"]
    for entry in expected["quantize"]:
        config = load_run(entry["config"], data_dir, model=pre["model"])
        summary = cmd_quantize(config)
        drop = baseline - summary["eval_accuracy"]
        measured[entry["set"]] = {
            "top1": summary["eval_accuracy"],
            "top1_drop": drop,
            "relative_residual": summary["relative_residual"],
            "rounds": summary["rounds"],
        }
        ok = drop <= entry["max_top1_drop"]
        checks.append({"check": f"{entry['set']}_top1_drop", "value": drop, "passed": ok})
        print(f"{'✓' if ok else '❌'} {entry['set']}: top-1 = {summary['eval_accuracy']:.4f} "
              f"(queda {drop:.4f}, máximo {entry['max_top1_drop']})")

        ok = (summary["rounds"] <= residual["max_rounds"]
              and summary["relative_residual"] < residual["max_relative_residual"])
        checks.append({"check": f"{entry['set']}_residual", "value": summary["relative_residual"],
                       "passed": ok})
        print(f"  {'✓' if ok else '❌'} ‖W−G‖/‖W‖ = {summary['relative_residual']:.4f} "
              f"após {summary['rounds']} rodadas ({summary['stop_reason']})")

    # 4. Relatório
    print("\n[4/4] Gravando relatório...")
    digest = source_digest()
    report = {
        "source_sha3": digest,
        "verify_stamp": stamp,
        "created": datetime.now(timezone.utc).isoformat(),
        "baseline_top1": baseline,
        "measured": measured,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }
    artifact_dir = BASE / "artifact"
    artifact_dir.mkdir(exist_ok=True)
    report_file = artifact_dir / f"reproduction_{digest[:16]}.json"
    with open(report_file, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
    print(f"✓ Relatório salvo: {report_file}")

    if "--record" in sys.argv[1:]:
        expected["reference"] = {
            "description": expected.get("reference", {}).get("description", ""),
            "source_sha3": digest,
            "recorded": report["created"],
            "baseline_top1": baseline,
            "quantize": measured,
        }
        with open(EXPECTED, "w") as f:
            json.dump(expected, f, indent=2, ensure_ascii=False)
            f.write("\n")
        print(f"✓ Valores de referência gravados em {EXPECTED.relative_to(BASE)}")

    if not report["passed"]:
        print("\n=== Reprodução FALHOU ===")
        sys.exit(1)
    print("\n=== Reprodução concluída com sucesso ===")


if __name__ == "__main__":
    main()
