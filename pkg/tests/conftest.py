import numpy as np
import pytest
from arenvq.config import ModelConfig, RunConfig


def tiny_model_config(**overrides):
    """A model small enough to run forward and backward passes in tests."""
    values = dict(
        levels=1,
        latent_dim=4,
        codebook_size=8,
        attention=True,
        base_filters=(4, 4, 4),
        level_filters={1: (4, 4), 2: (4, 4, 4), 3: (4, 4, 4, 4)},
        decoder_filters=4,
    )
    values.update(overrides)
    return ModelConfig(**values)


def tiny_run_config(output_dir, **model_overrides):
    config = RunConfig(model=tiny_model_config(**model_overrides))
    config.data.synthetic = 4
    config.data.resolution = 16
    config.data.split = 0.5
    config.train.epochs = 1
    config.train.batch_size = 2
    config.output_dir = str(output_dir)
    return config


TINY_INI = """
[model]
latent_dim = 4
codebook_size = 8
base_filters = 4,4,4
level_filters = 4,4 / 4,4,4 / 4,4,4,4
decoder_filters = 4

[data]
synthetic = 4
resolution = 16
split = 0.5

[train]
epochs = 1
batch_size = 2
"""


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_ini(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY_INI)
    return str(path)


@pytest.fixture
def images(rng):
    return rng.uniform(size=(2, 16, 16, 3)).astype(np.float32)
