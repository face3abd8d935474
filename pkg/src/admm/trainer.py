"""
Laço ADMM para pesos de baixa precisão

    W^{k+1} = argmin_W f(W) + (ρ/2)‖W − G^k + λ^k‖²     (passo proximal)
    G^{k+1} = Proj_C(W^{k+1} + λ^k)                      (projeção)
    λ^{k+1} = λ^k + W^{k+1} − G^{k+1}                     (dual)

O passo proximal é aproximado por iterações de extragradiente partindo
de W^k; a projeção é feita camada a camada com warm start em α.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from data_io import BatchStream, Dataset
from model_io import QuantizedModel
from network import LayerKind, LayerSpec, Network, evaluate
from quantset import (
    DegenerateCodesError,
    LayerPolicy,
    ProjectedLayer,
    QuantizedLayer,
    apply_layer_policy_traced,
)
from tensor_core import ShapeMismatchError, Tensor
from .config import AdmmConfig, AdmmConfigError, DivergenceError, ProxMethod
from .objectives import FreeParams, NetworkObjective, Objective
from .state import AdmmState, RoundRecord

logger = logging.getLogger(__name__)

EvaluateFn = Callable[[List[Tensor], FreeParams], Optional[float]]

GROUP_SELECTORS = ("all", "first", "last", "fc_first", "fc_last", "1x1")


def resolve_layer_policies(
    specs: Sequence[LayerSpec],
    default: Union[str, LayerPolicy],
    overrides: Optional[Dict[str, str]] = None,
) -> List[LayerPolicy]:
    """
    Política por camada parametrizada

    Seletores: nome da camada, all, first, last, fc_first, fc_last, 1x1.
    Precedência: padrão < all < grupos < nome exato.

    Raises:
        AdmmConfigError: Seletor que não corresponde a nenhuma camada conhecida
    """
    base = default if isinstance(default, LayerPolicy) else LayerPolicy.parse(default)
    policies = [base] * len(specs)
    overrides = overrides or {}
    names = [s.name for s in specs]
    fc = [i for i, s in enumerate(specs) if s.kind == LayerKind.FULLY_CONNECTED]

    def members(selector: str) -> List[int]:
        if selector == "all":
            return list(range(len(specs)))
        if selector == "first":
            return [0] if specs else []
        if selector == "last":
            return [len(specs) - 1] if specs else []
        if selector == "fc_first":
            return fc[:1]
        if selector == "fc_last":
            return fc[-1:]
        if selector == "1x1":
            return [i for i, s in enumerate(specs)
                    if s.kind == LayerKind.CONV2D and s.kernel_size == (1, 1)]
        return [names.index(selector)]

    for selector in overrides:
        if selector not in GROUP_SELECTORS and selector not in names:
            raise AdmmConfigError(f"Seletor de camada desconhecido: {selector} (camadas: {names})")

    ordered = sorted(overrides, key=lambda s: (s in names, s != "all"))
    for selector in ordered:
        try:
            policy = LayerPolicy.parse(overrides[selector])
        except ValueError as e:
            raise AdmmConfigError(f"Política inválida para {selector}: {e}") from e
        for i in members(selector):
            policies[i] = policy
    return policies


def augmented_loss(
    objective: Objective,
    weights: Sequence[Tensor],
    free: FreeParams,
    projected: Sequence[ProjectedLayer],
    duals: Sequence[Tensor],
    rho: float,
    batch: Any,
) -> float:
    """
    L_ρ(W, G, λ) = f(W) + (ρ/2)·Σ‖W − G + λ‖² (sem o termo constante em λ)
    """
    loss, _, _ = objective.loss_and_gradient(weights, free, batch)
    penalty = 0.0
    for w, g, lam in zip(weights, projected, duals):
        if not (w.shape == g.shape == lam.shape):
            raise ShapeMismatchError(f"W {w.shape}, G {g.shape}, λ {lam.shape} divergem")
        d = w - g.realize() + lam
        penalty += float(np.vdot(d, d))
    return loss + 0.5 * rho * penalty


def _augmented_gradient(
    objective: Objective,
    weights: Sequence[Tensor],
    free: FreeParams,
    anchors: Sequence[Tensor],
    rho: float,
    batch: Any,
) -> Tuple[float, List[Tensor], FreeParams]:
    loss, grad_w, grad_free = objective.loss_and_gradient(weights, free, batch)
    if not math.isfinite(loss):
        raise DivergenceError(f"Perda não finita ({loss}) no passo proximal; reduza β")
    grads = [g + rho * (w - a) for g, w, a in zip(grad_w, weights, anchors)]
    return loss, grads, grad_free


def _descend(params: Sequence[Optional[Tensor]], grads: Sequence[Optional[Tensor]], beta: float):
    return [p if (p is None or g is None) else p - beta * g for p, g in zip(params, grads)]


def proximal_step(
    state: AdmmState,
    objective: Objective,
    free: FreeParams,
    config: AdmmConfig,
    batches: Iterator[Any],
    steps: int,
    round_index: int = 1,
) -> Tuple[List[Tensor], FreeParams, float]:
    """
    Aproxima argmin_W L_ρ(W, G^k, λ^k) partindo de W^k

    Cada iteração usa um minibatch novo para as duas fases. O gradiente
    em W é ∂f + ρ(W − G^k + λ^k); parâmetros livres usam ∂f puro.

    Returns:
        Tupla (W corrigido, parâmetros livres, perda média de f)

    Raises:
        DivergenceError: Perda ou W não finitos
    """
    beta_p, beta_c = config.betas(round_index)
    anchors = [g - lam for g, lam in zip(state.realized(), state.duals)]
    weights = [w.copy() for w in state.weights]
    losses = []
    for _ in range(steps):
        batch = next(batches)
        loss, gw, gf = _augmented_gradient(objective, weights, free, anchors, state.rho, batch)
        losses.append(loss)
        if config.prox_method == ProxMethod.GRADIENT:
            weights = _descend(weights, gw, beta_p)
            free = _descend(free, gf, beta_p)
            continue
        w_pred = _descend(weights, gw, beta_p)
        f_pred = _descend(free, gf, beta_p)
        _, gw_pred, gf_pred = _augmented_gradient(
            objective, w_pred, f_pred, anchors, state.rho, batch
        )
        weights = _descend(weights, gw_pred, beta_c)
        free = _descend(free, gf_pred, beta_c)

    params = list(weights) + [p for p in free if p is not None]
    if not all(np.isfinite(p).all() for p in params):
        raise DivergenceError("W não finito após o passo proximal; reduza β")

    mean_loss = float(np.mean(losses)) if losses else float("nan")
    logger.debug("proximal: %d passos, perda média %.6g", steps, mean_loss)
    return weights, free, mean_loss


def projection_step(
    tensors: Sequence[Tensor],
    policies: Sequence[LayerPolicy],
    names: Sequence[str],
    previous: Optional[Sequence[ProjectedLayer]] = None,
    max_iters: int = 20,
) -> Tuple[List[ProjectedLayer], int]:
    """
    Projeta V_i = W_i + λ_i em cada camada

    Camadas de codebook partem do α anterior quando houver.

    Returns:
        Tupla (camadas projetadas, alternações somadas)

    Raises:
        DegenerateCodesError: Com o nome da camada na mensagem
    """
    projected = []
    iterations = 0
    for i, (v, policy, name) in enumerate(zip(tensors, policies, names)):
        init_alpha = None
        if previous is not None and isinstance(previous[i], QuantizedLayer):
            init_alpha = previous[i].alpha
        try:
            layer, trace = apply_layer_policy_traced(v, policy, init_alpha, max_iters)
        except DegenerateCodesError as e:
            raise DegenerateCodesError(f"camada {name}: {e}") from e
        if trace is not None:
            iterations += trace.iterations
        projected.append(layer)
    return projected, iterations


def dual_update(
    duals: Sequence[Tensor],
    weights: Sequence[Tensor],
    projected: Sequence[ProjectedLayer],
) -> List[Tensor]:
    """λ_i ← λ_i + W_i − G_i"""
    return [lam + w - g.realize() for lam, w, g in zip(duals, weights, projected)]


@dataclass
class AdmmResult:
    state: AdmmState
    free: FreeParams
    stop_reason: str
    history: List[RoundRecord] = field(default_factory=list)


def _record(
    state: AdmmState,
    config: AdmmConfig,
    round_index: int,
    train_loss: float,
    lagrangian: float,
    iterations: int,
    free: FreeParams,
    evaluate_fn: Optional[EvaluateFn],
) -> RoundRecord:
    accuracy = evaluate_fn(state.realized(), free) if evaluate_fn is not None else None
    record = RoundRecord(
        round=round_index,
        seed=config.seed,
        train_loss=train_loss,
        eval_accuracy=accuracy,
        primal_residual=state.primal_residual(),
        relative_residual=state.relative_residual(),
        rho=state.rho,
        lagrangian=lagrangian,
        projection_iterations=iterations,
        alphas=state.alphas(),
    )
    logger.info(
        "rodada %d: loss=%.5g resíduo=%.4g (rel %.4g) ρ=%.4g acc=%s",
        round_index, train_loss, record.primal_residual, record.relative_residual,
        state.rho, "-" if accuracy is None else f"{accuracy:.4f}",
    )
    return record


def run_admm(
    objective: Objective,
    weights: Sequence[Tensor],
    free: FreeParams,
    policies: Sequence[LayerPolicy],
    config: AdmmConfig,
    batches: Optional[Iterator[Any]] = None,
    names: Optional[Sequence[str]] = None,
    steps_per_round: Optional[int] = None,
    evaluate_fn: Optional[EvaluateFn] = None,
) -> AdmmResult:
    """
    Laço ADMM no nível da função objetivo

    Args:
        objective: f(W) com gradiente
        weights: W inicial por camada
        free: Parâmetros livres iniciais
        policies: Política por camada
        config: Parâmetros
        batches: Fonte de minibatches (None: repete None, para objetivos sem dados)
        names: Nomes das camadas
        steps_per_round: Iterações proximais (padrão config.proximal_steps_per_round, ou 1)
        evaluate_fn: Acurácia de G por rodada

    Returns:
        AdmmResult com estado final, histórico (rodada 0 = projeção inicial) e motivo de parada
    """
    if len(policies) != len(weights):
        raise AdmmConfigError(f"{len(policies)} políticas para {len(weights)} camadas")
    names = list(names) if names is not None else [f"layer{i}" for i in range(len(weights))]
    batches = batches if batches is not None else itertools.repeat(None)
    steps = steps_per_round or config.proximal_steps_per_round or 1

    weights = [np.array(w, dtype=np.float64, copy=True) for w in weights]
    duals = [np.zeros_like(w) for w in weights]
    projected, iterations = projection_step(
        weights, policies, names, None, config.projection_max_iters
    )
    state = AdmmState(weights, projected, duals, config.rho, names)

    batch = next(batches)
    f0 = objective.loss_and_gradient(state.weights, free, batch)[0]
    state.history.append(
        _record(state, config, 0, f0, f0 + state.penalty(), iterations, free, evaluate_fn)
    )

    stop_reason = "max_rounds"
    below = 0
    for k in range(1, config.max_rounds + 1):
        # o primeiro batch da rodada também avalia o Lagrangiano
        batch = next(batches)
        weights, free, train_loss = proximal_step(
            state, objective, free, config, itertools.chain([batch], batches), steps, k
        )
        targets = [w + lam for w, lam in zip(weights, state.duals)]
        projected, iterations = projection_step(
            targets, policies, names, state.projected, config.projection_max_iters
        )
        state.weights = weights
        state.projected = projected

        f_now = objective.loss_and_gradient(state.weights, free, batch)[0]
        lagrangian = f_now + state.penalty() - state.dual_energy()

        state.duals = dual_update(state.duals, state.weights, state.projected)
        state.round = k
        record = _record(state, config, k, train_loss, lagrangian, iterations, free, evaluate_fn)
        state.history.append(record)

        if record.primal_residual == 0.0:
            stop_reason = "zero_residual"
            break
        below = below + 1 if record.relative_residual < config.primal_tolerance else 0
        if below >= config.patience:
            stop_reason = "tolerance"
            break

        rho_next = config.next_rho(state.rho, k)
        if rho_next != state.rho:
            # μ = ρλ preservado
            state.duals = [lam * (state.rho / rho_next) for lam in state.duals]
            logger.info("ρ: %.4g → %.4g", state.rho, rho_next)
            state.rho = rho_next

    logger.info("ADMM parou após %d rodadas (%s)", state.round, stop_reason)
    return AdmmResult(state, free, stop_reason, state.history)


def admm_train(
    pretrained: Union[Network, QuantizedModel],
    config: AdmmConfig,
    train: Dataset,
    test: Optional[Dataset] = None,
    policies: Optional[Sequence[LayerPolicy]] = None,
) -> Tuple[QuantizedModel, List[RoundRecord]]:
    """
    Quantiza uma rede pré-treinada por ADMM

    Args:
        pretrained: Rede (ou modelo) de referência
        config: Parâmetros
        train: Dados do passo proximal
        test: Dados da avaliação de G por rodada (opcional)
        policies: Política por camada (padrão: resolvida de config)

    Returns:
        Tupla (modelo com pesos G, histórico por rodada)
    """
    net = pretrained.to_network() if isinstance(pretrained, QuantizedModel) else pretrained
    specs = net.parameterized_specs
    if policies is None:
        policies = resolve_layer_policies(specs, config.default_set, config.layer_policy)
    stream = BatchStream(train, config.batch_size, config.seed, stream="admm_shuffle")
    steps = config.proximal_steps_per_round or stream.steps_per_epoch
    objective = NetworkObjective(net)

    evaluate_fn: Optional[EvaluateFn] = None
    if test is not None and len(test) > 0:
        def evaluate_fn(weights: List[Tensor], free: FreeParams) -> float:
            return evaluate(net.with_parameters(weights, free), test.images, test.labels).top1

    result = run_admm(
        objective,
        net.weights,
        objective.initial_free(),
        policies,
        config,
        stream,
        [s.name for s in specs],
        steps,
        evaluate_fn,
    )
    metadata = {
        "stage": "admm",
        "admm": config.to_dict(),
        "policies": [p.name for p in policies],
        "rounds": result.state.round,
        "stop_reason": result.stop_reason,
    }
    model = QuantizedModel(net.layers, net.input_shape, result.state.projected, result.free, metadata)
    return model, result.history
