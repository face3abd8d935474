"""
Testes para o módulo admm
"""

import itertools
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))
sys.path.insert(0, str(Path(__file__).parent))

from admm import (
    AdmmConfig,
    AdmmConfigError,
    AdmmState,
    DivergenceError,
    NetworkObjective,
    ProxMethod,
    QuadraticObjective,
    SaddleProblem,
    admm_train,
    augmented_loss,
    compare_methods,
    dual_update,
    iterations_to_tolerance,
    projection_step,
    proximal_step,
    read_csv,
    resolve_layer_policies,
    run_admm,
    write_history_csv,
)
from data_io import BatchStream, Dataset
from model_io import QuantizedModel
from network import (
    Network,
    cnn_layers,
    conv2d_layer,
    flatten,
    fully_connected,
    relu,
    softmax_cross_entropy,
)
from quantset import (
    FullPrecisionLayer,
    Int8Layer,
    LayerPolicy,
    PolicyKind,
    QuantizationSet,
    QuantizedLayer,
    project_quantize,
)
from oracles import grid_projection

TERNARY = LayerPolicy.parse("ternary")


def toy_config(**kwargs) -> AdmmConfig:
    base = dict(rho=1.0, rho_max=1.0, beta_p=0.25, beta_c=0.25, max_rounds=30,
                proximal_steps_per_round=50)
    base.update(kwargs)
    return AdmmConfig(**base)


def tiny_network(seed: int = 0) -> Network:
    layers = [
        fully_connected(4, 6, "fc1"),
        relu(),
        fully_connected(6, 3, "fc2"),
        softmax_cross_entropy(),
    ]
    return Network.initialize(layers, (4,), np.random.default_rng(seed))


def tiny_dataset(n: int = 48, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 3, size=n)
    centers = np.eye(3, 4) * 2.0
    images = centers[labels] + 0.3 * rng.normal(size=(n, 4))
    return Dataset(images, labels)


class TestAdmmConfig:
    """Testes para AdmmConfig"""

    def test_defaults_valid(self):
        """Testa padrões válidos"""
        config = AdmmConfig()
        assert config.prox_method == ProxMethod.EXTRAGRADIENT
        assert config.max_rounds == 30

    @pytest.mark.parametrize("field,value", [
        ("rho", 0.0), ("beta_p", -1.0), ("rho_growth", 0.5), ("patience", 0),
        ("max_rounds", -1), ("default_set", "pow2:9"), ("prox_method", "newton"),
    ])
    def test_invalid(self, field, value):
        """Testa rejeição de valores inválidos"""
        with pytest.raises(AdmmConfigError):
            AdmmConfig(**{field: value})

    def test_invalid_layer_policy(self):
        """Testa política de camada inválida"""
        with pytest.raises(AdmmConfigError):
            AdmmConfig(layer_policy={"fc1": "octal"})

    def test_round_trip(self):
        """Testa to_dict/from_dict"""
        config = AdmmConfig(rho=0.5, prox_method="gradient", layer_policy={"fc_last": "int8"})
        again = AdmmConfig.from_dict(config.to_dict())
        assert again == config
        assert config.to_dict()["prox_method"] == "gradient"

    def test_unknown_key(self):
        """Testa chave desconhecida"""
        with pytest.raises(AdmmConfigError):
            AdmmConfig.from_dict({"mu": 1.0})

    def test_rho_schedule(self):
        """Testa crescimento geométrico limitado de ρ"""
        config = AdmmConfig(rho=0.4, rho_growth=2.0, rho_growth_every=2, rho_max=1.0)
        assert config.next_rho(0.4, 1) == 0.4
        assert config.next_rho(0.4, 2) == 0.8
        assert config.next_rho(0.8, 4) == 1.0

    def test_beta_decay(self):
        """Testa decaimento de β por rodada"""
        config = AdmmConfig(beta_p=0.1, beta_c=0.2, beta_decay=0.5, beta_decay_every=2)
        assert config.betas(1) == (0.1, 0.2)
        assert config.betas(2) == (0.1, 0.2)
        assert config.betas(3) == (0.05, 0.1)


class TestLayerPolicies:
    """Testes para seletores de política por camada"""

    def test_default_all(self):
        """Testa padrão aplicado a todas as camadas"""
        specs = Network(cnn_layers(), (1, 28, 28)).parameterized_specs
        policies = resolve_layer_policies(specs, "pow2:2")
        assert [p.name for p in policies] == ["pow2:2"] * 3

    def test_selectors(self):
        """Testa fc_last, first e precedência do nome exato"""
        specs = Network(cnn_layers(), (1, 28, 28)).parameterized_specs
        policies = resolve_layer_policies(
            specs, "ternary", {"all": "binary", "first": "int8", "fc_last": "full_precision",
                               "conv2": "pow2:1"}
        )
        assert [p.name for p in policies] == ["int8", "pow2:1", "full_precision"]

    def test_1x1(self):
        """Testa seletor de convoluções 1×1"""
        layers = [
            conv2d_layer(1, 2, 3, "c3"),
            conv2d_layer(2, 2, 1, "c1"),
            flatten(),
            fully_connected(8, 2, "fc"),
            softmax_cross_entropy(),
        ]
        specs = Network(layers, (1, 4, 4)).parameterized_specs
        policies = resolve_layer_policies(specs, "ternary", {"1x1": "int8"})
        assert [p.kind for p in policies] == [PolicyKind.CODEBOOK, PolicyKind.INT8, PolicyKind.CODEBOOK]

    def test_unknown_selector(self):
        """Testa seletor desconhecido"""
        specs = tiny_network().parameterized_specs
        with pytest.raises(AdmmConfigError):
            resolve_layer_policies(specs, "ternary", {"conv9": "int8"})


class TestSteps:
    """Testes para os passos individuais"""

    def _state(self, w, g_layer, lam, rho=1.0):
        return AdmmState([np.asarray(w, float)], [g_layer], [np.asarray(lam, float)], rho, ["w"])

    def test_dual_update(self):
        """Testa λ ← λ + W − G"""
        g = QuantizedLayer(np.array([1, -1]), 1.0, QuantizationSet.parse("ternary"))
        (lam,) = dual_update([np.array([0.1, 0.0])], [np.array([0.9, -1.1])], [g])
        np.testing.assert_allclose(lam, [0.0, -0.1])

    def test_augmented_loss(self):
        """Testa f + (ρ/2)‖W − G + λ‖²"""
        g = QuantizedLayer(np.array([1, 0]), 0.5, QuantizationSet.parse("ternary"))
        objective = QuadraticObjective([np.zeros(2)])
        value = augmented_loss(objective, [np.array([1.0, 1.0])], [], [g], [np.array([0.0, 0.5])],
                               2.0, None)
        # f = 1, penalidade = (2/2)·(0.25 + 2.25)
        assert value == pytest.approx(1.0 + 2.5)

    def test_state_shape_mismatch(self):
        """Testa formas divergentes no estado"""
        g = QuantizedLayer(np.array([1, 0, 1]), 1.0, QuantizationSet.parse("ternary"))
        with pytest.raises(ValueError):
            self._state([1.0, 2.0], g, [0.0, 0.0])

    def test_proximal_closed_form(self):
        """Testa passo proximal contra (w* + ρ(G − λ))/(1 + ρ)"""
        target = np.array([0.9, -1.1])
        g = QuantizedLayer(np.array([1, -1]), 1.0, QuantizationSet.parse("ternary"))
        lam = np.array([0.05, -0.2])
        state = self._state([0.0, 0.0], g, lam, rho=1.0)
        config = toy_config()
        weights, free, _ = proximal_step(
            state, QuadraticObjective([target]), [], config, iter(lambda: None, 1), 100
        )
        expected = (target + 1.0 * (g.realize() - lam)) / 2.0
        np.testing.assert_allclose(weights[0], expected, atol=1e-10)
        np.testing.assert_array_equal(state.weights[0], [0.0, 0.0])

    def test_gradient_method(self):
        """Testa variante de gradiente simples"""
        target = np.array([0.9, -1.1])
        g = QuantizedLayer(np.array([1, -1]), 1.0, QuantizationSet.parse("ternary"))
        state = self._state([0.0, 0.0], g, [0.0, 0.0])
        config = toy_config(prox_method="gradient")
        weights, _, _ = proximal_step(
            state, QuadraticObjective([target]), [], config, iter(lambda: None, 1), 200
        )
        np.testing.assert_allclose(weights[0], (target + g.realize()) / 2.0, atol=1e-10)

    def test_divergence(self):
        """Testa erro explícito para perda não finita"""
        class NanObjective:
            def loss_and_gradient(self, weights, free, batch):
                return float("nan"), [np.zeros_like(w) for w in weights], []

        g = QuantizedLayer(np.array([1]), 1.0, QuantizationSet.parse("ternary"))
        state = self._state([1.0], g, [0.0])
        with pytest.raises(DivergenceError):
            proximal_step(state, NanObjective(), [], toy_config(), iter(lambda: None, 1), 1)

    def test_dual_update_linear(self):
        """Testa resíduo v seguido de −v restaurando λ"""
        rng = np.random.default_rng(3)
        g = QuantizedLayer(np.zeros(6, dtype=np.int8), 1.0, QuantizationSet.parse("ternary"))
        lam0, v = rng.normal(size=6), rng.normal(size=6)
        (lam,) = dual_update([lam0], [v], [g])
        (lam,) = dual_update([lam], [-v], [g])
        np.testing.assert_allclose(lam, lam0, atol=1e-12)

    def test_dual_update_accumulates(self):
        """Testa duas rodadas com o mesmo resíduo: λ = 2v"""
        v = np.array([0.3, -0.7, 0.1])
        g = QuantizedLayer(np.array([1, 0, -1]), 0.5, QuantizationSet.parse("ternary"))
        w = v + g.realize()
        lam = [np.zeros(3)]
        for _ in range(2):
            lam = dual_update(lam, [w], [g])
        np.testing.assert_allclose(lam[0], 2 * v, atol=1e-15)

    @pytest.mark.parametrize("name", ["ternary", "pow2:2"])
    def test_projection_not_worse_than_previous(self, name):
        """Testa ‖W − G + λ‖² nunca acima do obtido mantendo o G anterior"""
        rng = np.random.default_rng(4)
        policy = LayerPolicy.parse(name)
        for _ in range(20):
            w, lam = rng.normal(size=12), 0.1 * rng.normal(size=12)
            (previous,), _ = projection_step([rng.normal(size=12)], [policy], ["w"])
            (new,), _ = projection_step([w + lam], [policy], ["w"], [previous])
            before = w - previous.realize() + lam
            after = w - new.realize() + lam
            assert np.vdot(after, after) <= np.vdot(before, before) + 1e-12

    def test_augmented_loss_feasible(self):
        """Testa L_ρ = f com W = G e λ = 0"""
        rng = np.random.default_rng(5)
        g = QuantizedLayer(np.array([1, -1, 0, 1]), 0.4, QuantizationSet.parse("ternary"))
        objective = QuadraticObjective([rng.normal(size=4)])
        w = g.realize()
        f = objective.loss_and_gradient([w], [], None)[0]
        assert augmented_loss(objective, [w], [], [g], [np.zeros(4)], 3.0, None) == f

    def test_augmented_loss_recomposition(self):
        """Testa L_ρ − (ρ/2)‖λ‖² = f + ρ⟨W − G, λ⟩ + (ρ/2)‖W − G‖²"""
        rng = np.random.default_rng(6)
        qset = QuantizationSet.parse("pow2:1")
        for _ in range(10):
            w, lam, t = rng.normal(size=(3, 5))
            g = QuantizedLayer(rng.integers(-2, 3, size=5), float(rng.uniform(0.1, 2.0)), qset)
            rho = float(rng.uniform(0.01, 5.0))
            objective = QuadraticObjective([t])
            value = augmented_loss(objective, [w], [], [g], [lam], rho, None)
            f = objective.loss_and_gradient([w], [], None)[0]
            r = w - g.realize()
            expected = f + rho * np.vdot(r, lam) + 0.5 * rho * np.vdot(r, r)
            assert value - 0.5 * rho * np.vdot(lam, lam) == pytest.approx(expected, rel=1e-10, abs=1e-12)

    @pytest.mark.parametrize("method", ["extragradient", "gradient"])
    def test_divergence_final_weights(self, method):
        """Testa erro explícito quando só a correção final diverge"""
        class OverflowObjective:
            def loss_and_gradient(self, weights, free, batch):
                return 0.0, [np.full_like(w, 1e300) for w in weights], []

        g = QuantizedLayer(np.array([1]), 1.0, QuantizationSet.parse("ternary"))
        state = self._state([1.0], g, [0.0])
        config = toy_config(prox_method=method, beta_p=1e10, beta_c=1e10)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(DivergenceError):
                proximal_step(state, OverflowObjective(), [], config, iter(lambda: None, 1), 1)

    def test_projection_warm_start(self):
        """Testa projeção com políticas mistas e contagem de alternações"""
        rng = np.random.default_rng(0)
        tensors = [rng.normal(size=8), rng.normal(size=(2, 2)), rng.normal(size=3)]
        policies = [TERNARY, LayerPolicy.parse("int8"), LayerPolicy.parse("full_precision")]
        projected, iterations = projection_step(tensors, policies, ["a", "b", "c"])
        assert isinstance(projected[0], QuantizedLayer)
        assert isinstance(projected[1], Int8Layer)
        assert isinstance(projected[2], FullPrecisionLayer)
        assert iterations >= 1
        again, _ = projection_step(tensors, policies, ["a", "b", "c"], projected)
        np.testing.assert_array_equal(again[0].codes, projected[0].codes)


class TestRunAdmm:
    """Testes para o laço ADMM em problemas de brinquedo"""

    def test_toy_ternary_converges_to_projection(self):
        """Testa G final igual à projeção euclidiana de w*"""
        target = np.array([0.9, -1.1])
        result = run_admm(QuadraticObjective([target]), [target.copy()], [], [TERNARY], toy_config())
        g = result.state.projected[0]
        alpha, codes, _ = grid_projection(target, [-1, 0, 1])
        np.testing.assert_array_equal(g.codes, codes)
        assert g.alpha == pytest.approx(alpha, rel=1e-6)
        assert result.stop_reason == "tolerance"
        assert result.history[-1].relative_residual < 1e-2
        np.testing.assert_allclose(result.state.duals[0], [-0.1, -0.1], atol=1e-2)

    def test_residual_decreases(self):
        """Testa resíduo primal decrescente no problema de brinquedo"""
        target = np.array([0.9, -1.1])
        result = run_admm(QuadraticObjective([target]), [target.copy()], [], [TERNARY],
                          toy_config(primal_tolerance=1e-6, max_rounds=8))
        residuals = [r.primal_residual for r in result.history[1:]]
        assert all(b < a for a, b in zip(residuals, residuals[1:]))

    def test_zero_loss_single_round(self):
        """Testa f ≡ 0: W alcança G na primeira rodada"""
        w0 = np.random.default_rng(1).normal(size=10)
        config = toy_config(beta_p=0.5, beta_c=0.5, proximal_steps_per_round=100, max_rounds=1)
        result = run_admm(QuadraticObjective([w0], curvature=0.0), [w0], [], [TERNARY], config)
        assert result.history[1].primal_residual < 1e-8

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_zero_loss_stationary(self, seed):
        """Testa f ≡ 0: G igual à projeção inicial e λ estacionário em 5 rodadas"""
        w0 = np.random.default_rng(seed).normal(size=10)
        initial = project_quantize(w0, QuantizationSet.parse("ternary"))
        objective = QuadraticObjective([w0], curvature=0.0)
        runs = []
        for rounds in (4, 5):
            config = toy_config(beta_p=0.5, beta_c=0.5, proximal_steps_per_round=100,
                                max_rounds=rounds, primal_tolerance=0.0)
            runs.append(run_admm(objective, [w0], [], [TERNARY], config))
        result = runs[-1]
        g = result.state.projected[0]
        np.testing.assert_array_equal(g.codes, initial.codes)
        assert g.alpha == pytest.approx(initial.alpha, rel=1e-9)
        assert all(r.primal_residual <= 1e-8 for r in result.history[1:])
        np.testing.assert_allclose(result.state.weights[0], g.realize(), atol=1e-8)
        np.testing.assert_allclose(result.state.duals[0], runs[0].state.duals[0], atol=1e-10)

    def test_lagrangian_uses_round_batch(self):
        """Testa Lagrangiano avaliado no primeiro batch da própria rodada"""
        class BatchScaledObjective(QuadraticObjective):
            def loss_and_gradient(self, weights, free, batch):
                loss, grads, rest = super().loss_and_gradient(weights, free, batch)
                return batch * loss, [batch * g for g in grads], rest

        target = np.array([0.9, -1.1])
        config = toy_config(max_rounds=1, proximal_steps_per_round=2, primal_tolerance=1e-9)
        result = run_admm(BatchScaledObjective([target]), [target.copy()], [], [TERNARY], config,
                          itertools.count(1))
        w, lam = result.state.weights[0], result.state.duals[0]
        # rodada 0 usa o batch 1; a rodada 1 começa no batch 2
        expected = 2 * 0.5 * np.vdot(w - target, w - target) + 0.5 * np.vdot(lam, lam)
        assert result.history[1].lagrangian == pytest.approx(expected, rel=1e-12)

    def test_feasible_start(self):
        """Testa parada imediata com W já viável"""
        w0 = 0.5 * np.array([1.0, -1.0, 0.0, 1.0])
        result = run_admm(QuadraticObjective([w0]), [w0], [], [TERNARY], toy_config())
        assert result.stop_reason == "zero_residual"
        assert result.state.round == 1
        assert result.history[-1].primal_residual == 0.0

    def test_zero_rounds(self):
        """Testa max_rounds = 0: só a projeção inicial"""
        target = np.array([0.9, -1.1])
        result = run_admm(QuadraticObjective([target]), [target], [], [TERNARY],
                          toy_config(max_rounds=0))
        assert len(result.history) == 1
        assert result.history[0].round == 0
        assert result.state.projected[0].codes.tolist() == [1, -1]

    def test_history_fields(self):
        """Testa registros por rodada"""
        target = np.array([0.9, -1.1])
        result = run_admm(QuadraticObjective([target]), [target], [], [TERNARY],
                          toy_config(max_rounds=3, primal_tolerance=1e-9), names=["w"])
        assert [r.round for r in result.history] == [0, 1, 2, 3]
        row = result.history[1].to_row()
        assert row["alpha_w"] == pytest.approx(1.0, rel=1e-2)
        assert row["eval_accuracy"] is None

    def test_rho_growth_rescales_duals(self):
        """Testa μ = ρλ preservado quando ρ cresce"""
        target = np.array([0.9, -1.1])
        config = toy_config(rho=0.25, rho_growth=2.0, rho_growth_every=1, rho_max=1.0,
                            max_rounds=1, primal_tolerance=1e-9)
        one = run_admm(QuadraticObjective([target]), [target], [], [TERNARY], config)
        first = one.history[-1]
        assert one.state.rho == 0.5
        fixed = toy_config(rho=0.25, max_rounds=1, primal_tolerance=1e-9)
        same = run_admm(QuadraticObjective([target]), [target], [], [TERNARY], fixed)
        np.testing.assert_allclose(one.state.duals[0] * 0.5, same.state.duals[0] * 0.25)
        assert first.rho == 0.25

    def test_policy_count_mismatch(self):
        """Testa número de políticas diferente do de camadas"""
        with pytest.raises(AdmmConfigError):
            run_admm(QuadraticObjective([np.ones(2)]), [np.ones(2)], [], [TERNARY, TERNARY],
                     toy_config())

    def test_full_precision_layer_bitwise(self):
        """Testa camada em precisão plena igual a W final bit a bit"""
        net = tiny_network()
        data = tiny_dataset()
        objective = NetworkObjective(net)
        config = AdmmConfig(beta_p=0.05, beta_c=0.05, max_rounds=3, batch_size=16)
        policies = [TERNARY, LayerPolicy.parse("full_precision")]
        result = run_admm(objective, net.weights, objective.initial_free(), policies, config,
                          BatchStream(data, 16, 0), ["fc1", "fc2"], 3)
        np.testing.assert_array_equal(result.state.projected[1].realize(), result.state.weights[1])
        assert not result.state.duals[1].any()


class TestAdmmTrain:
    """Testes para o treino ADMM de uma rede"""

    def test_feasible_output(self):
        """Testa todas as camadas restritas exatamente viáveis"""
        net = tiny_network()
        data = tiny_dataset()
        config = AdmmConfig(beta_p=0.05, beta_c=0.05, max_rounds=3, batch_size=16,
                            default_set="pow2:2")
        model, history = admm_train(net, config, data, data)
        assert isinstance(model, QuantizedModel)
        for payload in model.payloads:
            assert isinstance(payload, QuantizedLayer)
            assert payload.qset.contains(payload.codes)
            assert set(np.unique(payload.codes)) <= {-4, -2, -1, 0, 1, 2, 4}
        assert model.metadata["stage"] == "admm"
        assert model.metadata["rounds"] == len(history) - 1
        assert all(0.0 <= r.eval_accuracy <= 1.0 for r in history)

    def test_deterministic(self):
        """Testa histórico idêntico para a mesma seed"""
        data = tiny_dataset()
        config = AdmmConfig(beta_p=0.05, beta_c=0.05, max_rounds=2, batch_size=16, seed=5)
        runs = [admm_train(tiny_network(), config, data)[1] for _ in range(2)]
        assert [r.to_row() for r in runs[0]] == [r.to_row() for r in runs[1]]

    def test_accepts_quantized_model(self):
        """Testa entrada como modelo serializável"""
        model = QuantizedModel.from_network(tiny_network(), {"stage": "pretrain"})
        config = AdmmConfig(max_rounds=1, batch_size=16, layer_policy={"fc_last": "int8"})
        out, _ = admm_train(model, config, tiny_dataset())
        assert isinstance(out.payloads[0], QuantizedLayer)
        assert isinstance(out.payloads[1], Int8Layer)
        assert out.metadata["policies"] == ["ternary", "int8"]

    def test_history_csv(self, tmp_path):
        """Testa CSV por rodada com colunas alpha_<camada>"""
        config = AdmmConfig(max_rounds=2, batch_size=16)
        _, history = admm_train(tiny_network(), config, tiny_dataset())
        path = tmp_path / "rounds.csv"
        write_history_csv(path, history)
        rows = read_csv(path)
        assert len(rows) == 3
        assert "alpha_fc1" in rows[0] and "alpha_fc2" in rows[0]
        assert rows[0]["eval_accuracy"] == ""
        assert float(rows[1]["rho"]) == config.rho
        first = path.read_bytes()
        write_history_csv(path, history)
        assert path.read_bytes() == first


class TestExtragradient:
    """Testes para a comparação no problema de sela"""

    def test_problem(self):
        """Testa razão de curvaturas do problema fixo"""
        problem = SaddleProblem()
        assert problem.condition_number == pytest.approx(100.0)
        np.testing.assert_array_equal(problem.operator(np.zeros(2)), np.zeros(2))

    @pytest.mark.parametrize("beta", [0.01, 0.05, 0.1])
    def test_extragradient_beats_gradient(self, beta):
        """Testa extragradiente convergindo onde o gradiente não converge"""
        eg = iterations_to_tolerance("extragradient", beta)
        gd = iterations_to_tolerance("gradient", beta)
        assert eg is not None
        assert gd is None or eg < gd

    def test_gradient_diverges_large_step(self):
        """Testa divergência do gradiente simples com β = 0.1"""
        assert iterations_to_tolerance("gradient", 0.1) is None

    def test_compare_table(self):
        """Testa tabela de comparação"""
        rows = compare_methods((0.05,))
        assert rows[0]["beta"] == 0.05
        assert rows[0]["extragradient"] is not None

    def test_unknown_method(self):
        """Testa método desconhecido"""
        with pytest.raises(ValueError):
            iterations_to_tolerance("newton", 0.1)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
