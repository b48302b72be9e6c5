import numpy as np
import pytest

from src.config import DiscriminatorConfig, GeneratorConfig, RunConfig, SynthConfig, TrainConfig
from src.data_processing.generate_synthetic_data import synth_corpus


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow statistical tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_synth_config():
    return SynthConfig(vocab_size=6, motif_len=4, manual_joints=2, face_landmarks=3,
                       n_examples=12, min_tokens=1, max_tokens=3, noise_std=0.01, seed=0)


@pytest.fixture
def tiny_corpus(tiny_synth_config):
    """(corpus, vocabulary, bank) with pose_dim 12 and U_max <= 12"""
    return synth_corpus(tiny_synth_config)


@pytest.fixture
def tiny_generator_config():
    return GeneratorConfig(layers=1, heads=2, embed_dim=8, feedforward_dim=16, dropout=0.0)


@pytest.fixture
def tiny_discriminator_config():
    return DiscriminatorConfig(conv_layers=2, conv_features=6, filter_width=3, hidden_dim=8)


@pytest.fixture
def tiny_train_config():
    return TrainConfig(batch_size=4, epochs=1, lr=1e-3, seed=0)


@pytest.fixture
def tiny_run_config(tmp_path, tiny_synth_config, tiny_generator_config, tiny_discriminator_config,
                    tiny_train_config):
    return RunConfig(
        seed=0,
        synth=tiny_synth_config,
        generator=tiny_generator_config,
        discriminator=tiny_discriminator_config,
        training=tiny_train_config,
        paths={"corpus_dir": str(tmp_path / "corpus"), "run_dir": str(tmp_path / "run")},
    )
