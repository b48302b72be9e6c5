"""
Progressive transformer generator and conditional discriminator
"""

import numpy as np
import pytest

from src.autodiff import AdamState, Tensor, adam_step, backward
from src.autodiff.gradcheck import check_gradients
from src.config import TrainConfig
from src.data_processing.pose import CorpusLimits
from src.errors import ContractError, VocabularyError
from src.models.discriminator import ConditionalDiscriminator, feature_rows
from src.models.generator import (
    ProgressiveTransformer,
    decode,
    decode_step,
    encode_source,
    teacher_inputs,
)
from src.models.layers import causal_mask, multi_head_attention, sinusoidal_encoding
from src.pipelines.losses import discriminator_loss, example_regression_loss, generator_loss

GRAD_TOLERANCE = 1e-4


@pytest.fixture
def generator(tiny_corpus, tiny_generator_config):
    corpus, vocab, _ = tiny_corpus
    config = tiny_generator_config.resolved(corpus.layout.pose_dim, len(vocab))
    return ProgressiveTransformer(config, seed=0, layout=corpus.layout)


@pytest.fixture
def discriminator(tiny_corpus, tiny_discriminator_config):
    corpus, vocab, _ = tiny_corpus
    return ConditionalDiscriminator(tiny_discriminator_config, corpus.layout.pose_dim, len(vocab),
                                    corpus.limits, seed=0)


class TestLayers:

    def test_sinusoidal_encoding_first_row(self):
        table = sinusoidal_encoding(5, 8)
        assert table.shape == (5, 8)
        np.testing.assert_allclose(table[0, 0::2], 0.0)
        np.testing.assert_allclose(table[0, 1::2], 1.0)

    def test_attention_weights_are_distributions_over_kept_keys(self, generator, rng):
        x = Tensor(rng.normal(size=(4, generator.config.embed_dim)))
        _, weights = multi_head_attention(x, x, x, generator.params, "decoder.0.self_attention",
                                          generator.config.heads, causal_mask(4), return_weights=True)
        assert weights.shape == (generator.config.heads, 4, 4)
        np.testing.assert_allclose(weights.sum(axis=-1), 1.0)
        assert np.all(weights[:, np.triu_indices(4, k=1)[0], np.triu_indices(4, k=1)[1]] == 0.0)

    def test_mask_must_cover_keys(self, generator, rng):
        x = Tensor(rng.normal(size=(3, generator.config.embed_dim)))
        with pytest.raises(ContractError):
            multi_head_attention(x, x, x, generator.params, "decoder.0.self_attention",
                                 generator.config.heads, np.ones(5, dtype=bool))


class TestGenerator:

    def test_parameter_names_carry_prefix(self, generator):
        names = list(generator.params.state_dict())
        assert all(n.startswith("generator.") for n in names)
        assert "generator.output.weight" in names

    def test_decoder_is_causal(self, generator, tiny_corpus):
        example = tiny_corpus[0][0]
        encoded = generator.encode_source(example.source)
        inputs = teacher_inputs(example.target)
        poses, counters = decode(inputs, encoded, generator.params, generator.config)
        k = len(inputs) // 2
        changed = inputs.copy()
        changed[k:] += 5.0
        poses2, counters2 = decode(changed, encoded, generator.params, generator.config)
        np.testing.assert_allclose(poses.data[:k], poses2.data[:k], atol=1e-9, rtol=0)
        np.testing.assert_allclose(counters.data[:k], counters2.data[:k], atol=1e-9, rtol=0)
        assert not np.allclose(poses.data[k:], poses2.data[k:])

    def test_teacher_forcing_matches_sequential_steps(self, generator, tiny_corpus):
        example = tiny_corpus[0][1]
        poses, counters = generator.forward_teacher_forced(example)
        encoded = generator.encode_source(example.source)
        rows = example.target.with_counters()
        for u in range(len(example.target)):
            pose, counter = decode_step(rows[:u], encoded, generator.params, generator.config)
            np.testing.assert_allclose(pose, poses.data[u], atol=1e-9, rtol=0)
            assert counter == pytest.approx(counters.data[u], abs=1e-9)

    def test_counter_column_is_ignored_by_default(self, generator, tiny_corpus):
        example = tiny_corpus[0][1]
        encoded = generator.encode_source(example.source)
        inputs = teacher_inputs(example.target)
        shifted = inputs.copy()
        shifted[:, -1] += 0.3
        assert not generator.config.feed_counter
        a, _ = decode(inputs, encoded, generator.params, generator.config)
        b, _ = decode(shifted, encoded, generator.params, generator.config)
        np.testing.assert_array_equal(a.data, b.data)

    def test_fed_counter_reaches_the_decoder(self, tiny_corpus, tiny_generator_config):
        corpus, vocab, _ = tiny_corpus
        config = tiny_generator_config.model_copy(update={"feed_counter": True}).resolved(
            corpus.layout.pose_dim, len(vocab))
        model = ProgressiveTransformer(config, seed=0, layout=corpus.layout)
        example = corpus[1]
        encoded = model.encode_source(example.source)
        inputs = teacher_inputs(example.target)
        shifted = inputs.copy()
        shifted[:, -1] += 0.3
        a, _ = decode(inputs, encoded, model.params, config)
        b, _ = decode(shifted, encoded, model.params, config)
        assert not np.allclose(a.data, b.data)

    def test_counters_lie_in_open_unit_interval(self, generator, tiny_corpus):
        _, counters = generator.forward_teacher_forced(tiny_corpus[0][0])
        assert np.all(counters.data > 0.0) and np.all(counters.data < 1.0)

    def test_generate_stops_on_counter(self, generator):
        seq = generator.generate([1, 2], max_frames=6, stop_threshold=1e-300)
        assert len(seq) == 1
        assert not seq.truncated

    def test_generate_truncates_at_max_frames(self, generator):
        seq = generator.generate([1, 2], max_frames=5, stop_threshold=1.0)
        assert len(seq) == 5
        assert seq.truncated
        assert seq.values.shape == (5, generator.config.pose_dim)

    def test_generation_is_deterministic(self, generator):
        a = generator.generate([3, 1], max_frames=4)
        b = generator.generate([3, 1], max_frames=4)
        np.testing.assert_array_equal(a.values, b.values)

    def test_unknown_token_id(self, generator):
        with pytest.raises(VocabularyError):
            generator.encode_source([1, 99])

    def test_padding_only_source(self, generator):
        with pytest.raises(ContractError):
            encode_source([0, 0], generator.params, generator.config)

    def test_same_seed_same_weights(self, tiny_corpus, tiny_generator_config):
        corpus, vocab, _ = tiny_corpus
        config = tiny_generator_config.resolved(corpus.layout.pose_dim, len(vocab))
        a = ProgressiveTransformer(config, seed=4).params.state_dict()
        b = ProgressiveTransformer(config, seed=4).params.state_dict()
        for name in a:
            np.testing.assert_array_equal(a[name], b[name])

    def test_regression_loss_gradients(self, generator, tiny_corpus):
        example = tiny_corpus[0][2]
        params = generator.params
        tensors = {name: params[name] for name in
                   ("output.bias", "decoder.0.norm3.gain", "decoder.0.cross_attention.value.bias",
                    "encoder.0.feed_forward.output.bias", "pose_input.bias")}
        errors = check_gradients(lambda: example_regression_loss(example, generator.forward_teacher_forced(example)),
                                 tensors)
        for name, err in errors.items():
            assert err < GRAD_TOLERANCE, f"{name}: relative error {err:.3e}"

    def test_combined_loss_gradients_through_frozen_discriminator(self, generator, discriminator, tiny_corpus):
        corpus = tiny_corpus[0]
        example = min(corpus, key=lambda e: len(e.target))
        config = TrainConfig(lambda_reg=1.0, lambda_gan=0.5)

        def loss():
            out = generator.forward_teacher_forced(example)
            with discriminator.params.frozen():
                d_fake = discriminator(example.source, out[0])
            return generator_loss(example, out, d_fake, config)

        errors = check_gradients(loss, dict(generator.params.items()))
        assert any(name.endswith("weight") for name in errors)
        for name, err in errors.items():
            assert err < GRAD_TOLERANCE, f"{name}: relative error {err:.3e}"
        assert all(t.grad is None for _, t in discriminator.params.items())

    def test_overfits_a_single_example(self, generator, tiny_corpus):
        example = tiny_corpus[0][0]
        state = AdamState(lr=1e-2)
        for _ in range(500):
            loss = example_regression_loss(example, generator.forward_teacher_forced(example))
            backward(loss)
            adam_step(generator.params, state)
        assert example_regression_loss(example, generator.forward_teacher_forced(example)).item() < 1e-3
        produced = generator.generate(example.source, max_frames=3 * len(example.target))
        assert abs(len(produced) - len(example.target)) <= 1


class TestDiscriminator:

    def test_probability_in_open_interval(self, discriminator, tiny_corpus):
        for example in tiny_corpus[0].examples[:4]:
            d = discriminator(example.source, example.target.values)
            assert d.shape == ()
            assert 0.0 < d.item() < 1.0

    def test_features_have_fixed_size(self, discriminator, tiny_corpus):
        corpus = tiny_corpus[0]
        limits = corpus.limits
        for example in corpus.examples[:3]:
            h = discriminator.build_conditioned_features(example.source, example.target.values)
            assert h.shape == (limits.u_max + limits.t_max, discriminator.config.hidden_dim)

    def test_padding_rows(self, discriminator, tiny_corpus):
        corpus = tiny_corpus[0]
        example = min(corpus, key=lambda e: (len(e.target), len(e.source)))
        limits = corpus.limits
        h = discriminator.build_conditioned_features(example.source, example.target.values).data
        u, t = len(example.target), len(example.source)
        bias = discriminator.params["pose_projection.bias"].data
        if u < limits.u_max:
            np.testing.assert_array_equal(h[u:limits.u_max], np.broadcast_to(bias, (limits.u_max - u, len(bias))))
        assert np.all(h[limits.u_max + t:] == 0.0)

    def test_unconditioned_variant_uses_poses_only(self, tiny_corpus, tiny_discriminator_config):
        corpus, vocab, _ = tiny_corpus
        config = tiny_discriminator_config.model_copy(update={"conditioned": False})
        disc = ConditionalDiscriminator(config, corpus.layout.pose_dim, len(vocab), corpus.limits, seed=0)
        assert "source_embedding.weight" not in disc.params
        h = disc.build_conditioned_features(None, corpus[0].target.values)
        assert h.shape[0] == corpus.limits.u_max == feature_rows(config, corpus.limits)
        assert 0.0 < disc(None, corpus[0].target.values).item() < 1.0

    def test_too_short_for_convolutions(self, tiny_discriminator_config):
        config = tiny_discriminator_config.model_copy(update={"filter_width": 8})
        with pytest.raises(ContractError):
            ConditionalDiscriminator(config, 12, 7, CorpusLimits(u_max=4, t_max=2), seed=0)

    def test_rejects_target_longer_than_u_max(self, discriminator, tiny_corpus):
        u_max = tiny_corpus[0].limits.u_max
        with pytest.raises(ContractError):
            discriminator([1], np.zeros((u_max + 1, 12)))

    def test_mean_frame_substitution_changes_score(self, discriminator, tiny_corpus):
        corpus = tiny_corpus[0]
        example = corpus[0]
        flat = np.broadcast_to(corpus.mean_frame(), example.target.values.shape)
        assert discriminator(example.source, example.target.values).item() != \
            discriminator(example.source, flat).item()

    def test_source_conditioning_changes_score(self, discriminator, tiny_corpus):
        _, vocab, _ = tiny_corpus
        example = tiny_corpus[0][0]
        other = tuple(t % (len(vocab) - 1) + 1 for t in example.source)
        assert other != example.source
        assert discriminator(example.source, example.target.values).item() != \
            discriminator(other, example.target.values).item()

    def test_loss_gradients(self, discriminator, tiny_corpus):
        example = tiny_corpus[0][0]
        fake = np.zeros_like(example.target.values)
        params = discriminator.params
        tensors = {name: params[name] for name in
                   ("head.weight", "head.bias", "conv.1.bias", "source_embedding.bias", "pose_projection.bias")}

        def loss():
            return discriminator_loss(discriminator(example.source, example.target.values),
                                      discriminator(example.source, fake))

        errors = check_gradients(loss, tensors)
        for name, err in errors.items():
            assert err < GRAD_TOLERANCE, f"{name}: relative error {err:.3e}"

    def test_gradient_reaches_generated_poses(self, discriminator, tiny_corpus):
        example = tiny_corpus[0][0]
        poses = Tensor(example.target.values, requires_grad=True)
        with discriminator.params.frozen():
            d = discriminator(example.source, poses)
        backward(-d.log())
        assert poses.grad is not None and np.any(poses.grad != 0.0)
        assert all(t.grad is None for _, t in discriminator.params.items())

    def test_learns_to_separate_real_from_flat(self, discriminator, tiny_corpus):
        corpus = tiny_corpus[0]
        examples = corpus.examples[:6]
        mean = corpus.mean_frame()
        state = AdamState(lr=1e-2)

        def total_loss():
            loss = None
            for e in examples:
                flat = np.broadcast_to(mean, e.target.values.shape)
                term = discriminator_loss(discriminator(e.source, e.target.values), discriminator(e.source, flat))
                loss = term if loss is None else loss + term
            return loss * (1.0 / len(examples))

        for _ in range(150):
            backward(total_loss())
            adam_step(discriminator.params, state)
        real = [discriminator(e.source, e.target.values).item() for e in examples]
        flat = [discriminator(e.source, np.broadcast_to(mean, e.target.values.shape)).item() for e in examples]
        assert np.mean(real) > 0.9
        assert np.mean(flat) < 0.1
