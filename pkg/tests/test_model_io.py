"""
Testes para o módulo model_io
"""

import json
import struct
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from model_io import (
    MAGIC,
    CountingKernel,
    ModelFormatError,
    ModelLengthError,
    ModelVersionError,
    QuantizedModel,
    decode,
    encode,
    format_report,
    inspect_model,
    load,
    pack_codes,
    quantized_forward,
    save,
    shift_add_matmul,
    unpack_codes,
)
from network import (
    Network,
    conv2d_layer,
    flatten,
    fully_connected,
    max_pool2d,
    relu,
    softmax_cross_entropy,
)
from quantset import (
    CodebookViolationError,
    FullPrecisionLayer,
    Int8Layer,
    QuantizationSet,
    QuantizedLayer,
    int8_quantize,
    project_quantize,
)
from tensor_core import ShapeMismatchError

TERNARY = QuantizationSet.parse("ternary")


class NoMatmulArray(np.ndarray):
    """ndarray que falha em qualquer produto matricial"""

    def __matmul__(self, other):
        raise AssertionError("produto matricial no caminho shift/add")

    __rmatmul__ = __matmul__

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if ufunc is np.matmul:
            raise AssertionError("np.matmul no caminho shift/add")
        inputs = tuple(np.asarray(i) if isinstance(i, NoMatmulArray) else i for i in inputs)
        return getattr(ufunc, method)(*inputs, **kwargs)


def small_cnn_layers():
    return [
        conv2d_layer(1, 3, 3, "conv1", pad=1),
        relu(),
        max_pool2d(2),
        conv2d_layer(3, 2, 1, "conv2"),
        flatten(),
        fully_connected(2 * 3 * 3, 4, "fc1"),
        softmax_cross_entropy(),
    ]


def quantized_model(qset_names=("ternary", "pow2:2", "int8"), seed: int = 0) -> QuantizedModel:
    """CNN pequena com uma política por camada"""
    rng = np.random.default_rng(seed)
    net = Network.initialize(small_cnn_layers(), (1, 6, 6), rng)
    payloads = []
    for w, name in zip(net.weights, qset_names):
        if name == "int8":
            payloads.append(int8_quantize(w))
        elif name == "full_precision":
            payloads.append(FullPrecisionLayer(w))
        else:
            payloads.append(project_quantize(w, QuantizationSet.parse(name)))
    biases = [rng.normal(size=b.shape) for b in net.biases]
    return QuantizedModel(net.layers, net.input_shape, payloads, biases, {"stage": "test"})


class TestPacking:
    """Testes para o empacotamento em bits"""

    @pytest.mark.parametrize("name,bits", [("binary", 1), ("ternary", 2), ("pow2:2", 3), ("pow2:6", 4)])
    def test_size(self, name, bits):
        """Testa tamanho ceil(bits·d/8)"""
        qset = QuantizationSet.parse(name)
        codes = np.random.default_rng(0).choice(qset.alphabet, size=13)
        data = pack_codes(codes, qset)
        assert len(data) == -(-bits * 13 // 8)
        np.testing.assert_array_equal(unpack_codes(data, qset, 13), codes)

    def test_bit_layout(self):
        """Testa índices no alfabeto, MSB primeiro"""
        # ternário: −1 → 00, 0 → 01, +1 → 10
        assert pack_codes(np.array([-1, 0, 1, 1]), TERNARY) == bytes([0b00011010])

    def test_out_of_alphabet(self):
        """Testa código fora do alfabeto"""
        with pytest.raises(CodebookViolationError):
            pack_codes(np.array([2]), TERNARY)
        with pytest.raises(CodebookViolationError):
            unpack_codes(bytes([0b11000000]), TERNARY, 1)

    def test_nonzero_padding(self):
        """Testa bits de preenchimento não nulos"""
        with pytest.raises(ValueError):
            unpack_codes(bytes([0b10000001]), TERNARY, 1)


class TestContainer:
    """Testes para o container binário"""

    @pytest.mark.parametrize("encoding", ["int8", "packed"])
    def test_round_trip(self, tmp_path, encoding):
        """Testa save/load estrutural e re-save idêntico"""
        model = quantized_model()
        path = tmp_path / "m.lbadmm"
        size = save(model, path, encoding)
        assert size == path.stat().st_size
        loaded = load(path)
        assert loaded.names == model.names
        assert loaded.metadata == {"stage": "test"}
        for a, b in zip(model.payloads, loaded.payloads):
            assert type(a) is type(b)
            np.testing.assert_array_equal(a.realize(), b.realize())
        for a, b in zip(model.biases, loaded.biases):
            np.testing.assert_array_equal(a, b)
        assert encode(loaded) == path.read_bytes()

    def test_codebook_weights_exact(self):
        """Testa peso reconstruído = α × código em dupla precisão"""
        model = decode(encode(quantized_model()))
        layer = model.payloads[0]
        assert isinstance(layer, QuantizedLayer)
        np.testing.assert_array_equal(layer.realize(), layer.alpha * layer.codes.astype(np.float64))

    def test_full_precision(self):
        """Testa modelo de precisão plena"""
        model = quantized_model(("full_precision",) * 3)
        again = decode(encode(model))
        for a, b in zip(model.payloads, again.payloads):
            np.testing.assert_array_equal(a.weights, b.weights)

    def test_header_canonical(self):
        """Testa cabeçalho JSON com magic e tamanho"""
        raw = encode(quantized_model())
        assert raw[:8] == MAGIC
        (length,) = struct.unpack("<I", raw[8:12])
        header = json.loads(raw[12:12 + length])
        assert header["format"] == "LBADMM01"
        assert [p["payload"] for p in header["params"]] == ["codebook", "codebook", "int8"]

    def test_truncated(self):
        """Testa arquivo truncado em 1 byte"""
        raw = encode(quantized_model())
        with pytest.raises(ModelLengthError):
            decode(raw[:-1])
        with pytest.raises(ModelLengthError):
            decode(raw[:5])

    def test_trailing_bytes(self):
        """Testa bytes sobrando"""
        with pytest.raises(ModelLengthError):
            decode(encode(quantized_model()) + b"\x00")

    def test_bad_magic(self):
        """Testa magic inválido e versão não suportada"""
        raw = encode(quantized_model())
        with pytest.raises(ModelVersionError):
            decode(b"LBADMM02" + raw[8:])
        with pytest.raises(ModelFormatError):
            decode(b"NOTMODEL" + raw[8:])

    def test_code_outside_alphabet(self):
        """Testa código fora do alfabeto declarado"""
        model = quantized_model(("ternary", "ternary", "int8"))
        raw = bytearray(encode(model, "int8"))
        (length,) = struct.unpack("<I", raw[8:12])
        first_code = 12 + length + 8
        raw[first_code] = 3
        with pytest.raises(CodebookViolationError):
            decode(bytes(raw))

    @pytest.mark.parametrize("qset", [None, {"kind": "quinary"}, {"kind": "pow2", "shift": 9}, [1]])
    def test_invalid_codebook_entry(self, qset):
        """Testa entrada de codebook sem qset ou com qset inválido"""
        raw = encode(quantized_model())
        (length,) = struct.unpack("<I", raw[8:12])
        header = json.loads(raw[12:12 + length])
        if qset is None:
            del header["params"][0]["qset"]
        else:
            header["params"][0]["qset"] = qset
        new_header = json.dumps(header).encode()
        patched = raw[:8] + struct.pack("<I", len(new_header)) + new_header + raw[12 + length:]
        with pytest.raises(ModelFormatError):
            decode(patched)

    def test_invalid_encoding(self):
        """Testa codificação desconhecida"""
        with pytest.raises(ValueError):
            encode(quantized_model(), "zip")

    def test_from_network(self):
        """Testa modelo a partir de uma rede"""
        net = Network.initialize(small_cnn_layers(), (1, 6, 6), np.random.default_rng(3))
        model = QuantizedModel.from_network(net, {"stage": "pretrain"})
        x = np.random.default_rng(4).normal(size=(2, 1, 6, 6))
        np.testing.assert_array_equal(model.logits(x), net.logits(x))


class TestShiftAdd:
    """Testes para a inferência por somas e deslocamentos"""

    @pytest.mark.parametrize("names", [
        ("binary", "binary", "binary"),
        ("ternary", "ternary", "ternary"),
        ("pow2:1", "pow2:2", "int8"),
        ("pow2:2", "full_precision", "pow2:0"),
    ])
    def test_matches_float_path(self, names):
        """Testa caminho shift/add igual ao caminho float"""
        model = quantized_model(names, seed=1)
        x = np.random.default_rng(2).normal(size=(64, 1, 6, 6))
        np.testing.assert_allclose(quantized_forward(model, x), model.logits(x), atol=1e-9)

    def test_ternary_no_shifts(self):
        """Testa camada ternária só com somas e subtrações"""
        rng = np.random.default_rng(5)
        layer = project_quantize(rng.normal(size=(6, 4)), TERNARY)
        kernel = CountingKernel()
        x = rng.normal(size=(3, 6))
        out = shift_add_matmul(x, layer, kernel)
        assert kernel.counts["shift"] == 0
        # uma multiplicação por saída (α)
        assert kernel.counts["multiply"] == out.size
        np.testing.assert_allclose(out, x @ layer.realize(), atol=1e-12)

    def test_pow2_uses_shifts(self):
        """Testa deslocamentos para níveis 2 e 4"""
        qset = QuantizationSet.parse("pow2:2")
        layer = QuantizedLayer(np.array([[4, -2], [1, 0]]), 0.5, qset)
        kernel = CountingKernel()
        out = shift_add_matmul(np.array([[1.0, 1.0]]), layer, kernel)
        assert kernel.counts["shift"] == 2 * out.size
        np.testing.assert_allclose(out, [[2.5, -1.0]])

    def test_accumulate_without_matmul(self):
        """Testa soma mascarada sem produto matricial em ponto flutuante"""
        rng = np.random.default_rng(6)
        plain = rng.normal(size=(5, 7))
        layer = project_quantize(rng.normal(size=(7, 3)), QuantizationSet.parse("pow2:2"))
        out = shift_add_matmul(plain.view(NoMatmulArray), layer, CountingKernel())
        np.testing.assert_allclose(np.asarray(out), plain @ layer.realize(), atol=1e-12)

    def test_accumulate_shape_mismatch(self):
        """Testa máscara com número de linhas diferente da entrada"""
        with pytest.raises(ShapeMismatchError):
            CountingKernel().accumulate(np.ones((2, 3)), np.ones((4, 2), dtype=bool))

    def test_all_zero_codes(self):
        """Testa camada de códigos nulos"""
        layer = QuantizedLayer(np.zeros((5, 3), dtype=np.int8), 0.7, TERNARY)
        out = shift_add_matmul(np.random.default_rng(0).normal(size=(4, 5)), layer, CountingKernel())
        np.testing.assert_array_equal(out, np.zeros((4, 3)))

    def test_shape_mismatch(self):
        """Testa batch com forma errada"""
        with pytest.raises(ShapeMismatchError):
            quantized_forward(quantized_model(), np.zeros((2, 1, 5, 5)))


class TestInspect:
    """Testes para o relatório por camada"""

    def test_report(self):
        """Testa tipo, alfabeto e tamanho empacotado"""
        reports = inspect_model(quantized_model(("ternary", "pow2:2", "int8")))
        ternary, pow2, int8 = reports
        assert ternary.payload == "codebook"
        assert ternary.alphabet == [-1, 0, 1]
        assert ternary.bits_per_weight == 2
        assert ternary.packed_bytes == -(-2 * 27 // 8) + 8
        assert pow2.alphabet == [-4, -2, -1, 0, 1, 2, 4]
        assert pow2.bits_per_weight == 3
        assert int8.payload == "int8"
        assert int8.packed_bytes == int8.weights + 8
        assert 0.0 <= ternary.zero_fraction <= 1.0

    def test_binary_bits(self):
        """Testa 1 bit por peso no binário"""
        (first, *_) = inspect_model(quantized_model(("binary", "binary", "binary")))
        assert first.bits_per_weight == 1
        assert first.zero_fraction == 0.0

    def test_format(self):
        """Testa tabela legível"""
        text = format_report(inspect_model(quantized_model()))
        lines = text.splitlines()
        assert len(lines) == 4
        assert "{-1,0,1}" in lines[1]


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
