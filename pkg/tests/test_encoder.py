"""Attention, the transformer stack, pooling, and classification heads."""

import math

import numpy as np
import pytest

from mtlc.errors import ContractError, ShapeError
from mtlc.encoder import (
    EncoderConfig,
    HeadSpec,
    attention,
    classify,
    encoder_forward,
    forward_call_count,
    head_view,
    init_params,
    multi_head,
    param_count,
    param_names,
    reset_forward_calls,
)
from mtlc.numcore import Tensor, grad_check, matmul, stream, sum_all
from mtlc.text import build_vocab, encode


@pytest.fixture
def small_config():
    return EncoderConfig(
        vocab_size=12, d_model=8, n_heads=2, n_layers=2, d_ffn=16, max_len=8, dropout_p=0.0
    )


@pytest.fixture
def heads():
    return [HeadSpec("sentiment", 5, hidden=16), HeadSpec("offense", 6, hidden=16)]


@pytest.fixture
def params(small_config, heads):
    return init_params(small_config, heads, seed=3)


@pytest.fixture
def vocab():
    return build_vocab(["a b c d e f", "b c d"], mode="word")


class TestConfigValidation:
    def test_head_divisibility(self):
        with pytest.raises(ContractError):
            EncoderConfig(vocab_size=10, d_model=10, n_heads=3)

    def test_dropout_bounds(self):
        with pytest.raises(ContractError):
            EncoderConfig(vocab_size=10, dropout_p=1.0)

    def test_positive_dimensions(self):
        with pytest.raises(ContractError):
            EncoderConfig(vocab_size=0)

    def test_head_min_classes(self):
        with pytest.raises(ContractError):
            HeadSpec("t", 1)


class TestAttention:
    def test_single_position(self):
        one = Tensor([[1.0]])
        assert attention(one, one, one).data.tolist() == [[1.0]]

    def test_equal_scores_give_column_mean(self):
        q = Tensor(np.zeros((2, 3)))
        k = Tensor(np.random.default_rng(0).normal(size=(4, 3)))
        v = Tensor(np.random.default_rng(1).normal(size=(4, 5)))
        out = attention(q, k, v)
        assert np.abs(out.data - v.data.mean(axis=0)).max() < 1e-12

    def test_matches_three_line_oracle(self):
        rng = np.random.default_rng(7)
        q, k, v = rng.normal(size=(3, 2)), rng.normal(size=(3, 2)), rng.normal(size=(3, 4))
        scores = q @ k.T / math.sqrt(2)
        e = np.exp(scores - scores.max(axis=1, keepdims=True))
        weights = e / e.sum(axis=1, keepdims=True)
        oracle = weights @ v
        out = attention(Tensor(q), Tensor(k), Tensor(v))
        assert np.abs(out.data - oracle).max() < 1e-12

    def test_masked_keys_get_zero_weight(self):
        rng = np.random.default_rng(8)
        q, k, v = rng.normal(size=(2, 2)), rng.normal(size=(3, 2)), rng.normal(size=(3, 2))
        out = attention(Tensor(q), Tensor(k), Tensor(v), mask=[1, 1, 0])
        v2 = v.copy()
        v2[2] = 1e6  # content behind the mask must be invisible
        out2 = attention(Tensor(q), Tensor(k), Tensor(v2), mask=[1, 1, 0])
        assert np.array_equal(out.data, out2.data)

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            attention(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 4))), Tensor(np.zeros((2, 4))))

    def test_mask_length_checked(self):
        x = Tensor(np.zeros((2, 2)))
        with pytest.raises(ShapeError):
            attention(x, x, x, mask=[1, 1, 1])


class TestMultiHead:
    def test_single_head_degenerates_to_attention(self, small_config, heads):
        cfg = EncoderConfig(vocab_size=12, d_model=8, n_heads=1, n_layers=1, d_ffn=16, max_len=8, dropout_p=0.0)
        params = init_params(cfg, heads, seed=5)
        x = Tensor(np.random.default_rng(2).normal(size=(4, 8)))
        mask = [1, 1, 1, 0]
        got = multi_head(x, params, 0, 1, mask)
        expected = matmul(
            attention(
                matmul(x, params["layer0.wq"]),
                matmul(x, params["layer0.wk"]),
                matmul(x, params["layer0.wv"]),
                mask,
            ),
            params["layer0.wo"],
        )
        assert np.array_equal(got.data, expected.data)

    def test_output_shape(self, params):
        x = Tensor(np.random.default_rng(3).normal(size=(5, 8)))
        assert multi_head(x, params, 0, 2, [1] * 5).shape == (5, 8)

    def test_pad_content_permutation_invariance(self, params):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(6, 8))
        mask = [1, 1, 1, 0, 0, 0]
        base = multi_head(Tensor(x), params, 0, 2, mask).data
        x2 = x.copy()
        x2[[3, 4, 5]] = x2[[5, 3, 4]]  # permute pad rows' content
        swapped = multi_head(Tensor(x2), params, 0, 2, mask).data
        assert np.abs(base[:3] - swapped[:3]).max() < 1e-9


class TestEncoderForward:
    def test_zero_params_give_zero_cls(self, small_config, heads, vocab):
        params = {
            name: Tensor(
                np.ones(t.shape) if name.endswith("_g") else np.zeros(t.shape),
                requires_grad=True,
                name=name,
            )
            for name, t in init_params(small_config, heads, seed=0).items()
        }
        seq = encode("a b c", vocab, small_config.max_len)
        cls = encoder_forward(seq, params, small_config)
        assert np.array_equal(cls.data, np.zeros(8))

    def test_padded_tail_change_is_shielded(self, small_config, params, vocab):
        seq = encode("a b c", vocab, small_config.max_len)
        base = encoder_forward(seq, params, small_config).data
        tampered = list(seq.ids)
        assert seq.mask[6] == 0
        tampered[6] = 5  # still a pad slot, different token id
        seq2 = type(seq)(ids=tuple(tampered), mask=seq.mask, raw_length=seq.raw_length)
        out = encoder_forward(seq2, params, small_config).data
        assert np.abs(base - out).max() < 1e-9

    def test_training_mode_deterministic_per_stream(self, heads, vocab):
        cfg = EncoderConfig(vocab_size=12, d_model=8, n_heads=2, n_layers=2, d_ffn=16, max_len=8, dropout_p=0.3)
        params = init_params(cfg, heads, seed=1)
        seq = encode("a b c d", vocab, cfg.max_len)
        a = encoder_forward(seq, params, cfg, training=True, rng=stream(9, "drop")).data
        b = encoder_forward(seq, params, cfg, training=True, rng=stream(9, "drop")).data
        assert np.array_equal(a, b)

    def test_shape_invariant_across_lengths(self, small_config, params, vocab):
        for n_tokens in range(1, small_config.max_len - 1):
            text = " ".join(["b"] * n_tokens)
            seq = encode(text, vocab, small_config.max_len)
            assert encoder_forward(seq, params, small_config).shape == (8,)

    def test_wrong_length_rejected(self, small_config, params, vocab):
        seq = encode("a", vocab, 6)
        with pytest.raises(ContractError):
            encoder_forward(seq, params, small_config)

    def test_out_of_vocab_id_rejected(self, small_config, params, vocab):
        seq = encode("a", vocab, small_config.max_len)
        bad = type(seq)(ids=(2, 99, 3, 0, 0, 0, 0, 0), mask=seq.mask, raw_length=1)
        with pytest.raises(ContractError):
            encoder_forward(bad, params, small_config)

    def test_forward_counter(self, small_config, params, vocab):
        reset_forward_calls()
        seq = encode("a b", vocab, small_config.max_len)
        for _ in range(3):
            encoder_forward(seq, params, small_config)
        assert forward_call_count() == 3


class TestClassify:
    def test_zero_weights_zero_logits(self):
        head = {
            "w_hidden": Tensor(np.zeros((4, 3))),
            "b_hidden": Tensor(np.zeros(3)),
            "w_out": Tensor(np.zeros((3, 5))),
            "b_out": Tensor(np.zeros(5)),
        }
        logits = classify(Tensor(np.ones(4)), head)
        assert logits.data.tolist() == [0.0] * 5

    def test_logit_sizes_match_schemas(self, small_config, params, vocab):
        seq = encode("a b", vocab, small_config.max_len)
        cls = encoder_forward(seq, params, small_config)
        assert classify(cls, head_view(params, "sentiment")).shape == (5,)
        assert classify(cls, head_view(params, "offense")).shape == (6,)

    def test_hand_two_class_case(self):
        head = {
            "w_hidden": Tensor(np.array([[1.0, 0.0], [0.0, -1.0]])),
            "b_hidden": Tensor(np.array([0.5, 0.25])),
            "w_out": Tensor(np.array([[2.0, -1.0], [1.0, 3.0]])),
            "b_out": Tensor(np.array([0.1, -0.2])),
        }
        cls = Tensor(np.array([1.0, 2.0]))
        # hidden = relu([1*1+0.5, -2+0.25]) = [1.5, 0]
        # logits = [1.5*2+0.1, 1.5*-1-0.2] = [3.1, -1.7]
        logits = classify(cls, head)
        assert np.abs(logits.data - np.array([3.1, -1.7])).max() < 1e-12

    def test_shape_mismatch(self, params):
        with pytest.raises(ShapeError):
            classify(Tensor(np.ones(3)), head_view(params, "sentiment"))

    def test_missing_head(self, params):
        with pytest.raises(ContractError):
            head_view(params, "nosuch")


class TestParams:
    def test_count_matches_closed_form(self, small_config, heads, params):
        total = sum(p.size for p in params.values())
        assert total == param_count(small_config, heads)

    def test_count_formula_default_head(self):
        cfg = EncoderConfig(vocab_size=100, d_model=64, n_heads=4, n_layers=2, d_ffn=128, max_len=64)
        heads = [HeadSpec("sentiment", 5)]
        params = init_params(cfg, heads, seed=0)
        assert sum(p.size for p in params.values()) == param_count(cfg, heads)

    def test_name_set_is_deterministic(self, small_config, heads):
        assert param_names(small_config, heads) == sorted(
            init_params(small_config, heads, seed=9)
        )

    def test_init_distribution(self, small_config, heads, params):
        w = params["layer0.wq"].data
        assert np.abs(w).max() <= 2 * 0.02 + 1e-12
        assert 0.01 < w.std() < 0.03
        assert np.array_equal(params["layer0.norm1_g"].data, np.ones(8))
        assert np.array_equal(params["layer0.ffn_b1"].data, np.zeros(16))

    def test_per_tensor_streams_are_stable(self, small_config, heads):
        both = init_params(small_config, heads, seed=4)
        solo = init_params(small_config, heads[:1], seed=4)
        for name in solo:
            assert np.array_equal(both[name].data, solo[name].data)


class TestEncoderGradients:
    def test_parameter_gradient_spot_checks(self, vocab, heads):
        cfg = EncoderConfig(vocab_size=12, d_model=4, n_heads=2, n_layers=1, d_ffn=8, max_len=6, dropout_p=0.0)
        rng = np.random.default_rng(55)
        params = {
            name: Tensor(rng.uniform(-0.5, 0.5, size=t.shape), requires_grad=True, name=name)
            for name, t in init_params(cfg, [HeadSpec("sentiment", 5, hidden=8)], seed=0).items()
        }
        seq = encode("a b c", vocab, cfg.max_len)

        def loss_with(name, x):
            trial = dict(params)
            trial[name] = x
            cls = encoder_forward(seq, trial, cfg)
            logits = classify(cls, head_view(trial, "sentiment"))
            return sum_all(mul_scalar(logits))

        def mul_scalar(t):
            from mtlc.numcore import mul

            return mul(t, Tensor(np.arange(1.0, 6.0)))

        for name in ("layer0.wq", "layer0.ffn_w1", "pooler_w", "head.sentiment.w_hidden", "tok_emb"):
            probe = Tensor(params[name].data.copy(), name=name)
            assert grad_check(lambda x: loss_with(name, x), probe, h=1e-5) < 1e-4, name
