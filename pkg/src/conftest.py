"""
Shared pytest fixtures.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from imagegen import GenerationConfig, generate_dataset, load_dataset  # noqa: E402
from nn import ModelConfig, LayerSpec, init_weights  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tiny_model(n_classes: int = 3, size: int = 8, channels: int = 2, hidden: int = 6,
               dropout: float = 0.0) -> ModelConfig:
    """conv -> relu -> pool -> dropout -> flatten -> fc -> relu -> fc -> softmax on a size x size input."""
    return ModelConfig(
        input_shape=(1, size, size), n_classes=n_classes, conv_method='direct',
        layers=[
            LayerSpec.conv(channels), LayerSpec.of('relu'), LayerSpec.of('maxpool'),
            LayerSpec.dropout(dropout), LayerSpec.of('flatten'),
            LayerSpec.fc(hidden), LayerSpec.of('relu'),
            LayerSpec.fc(n_classes), LayerSpec.of('softmax'),
        ],
    )


@pytest.fixture
def tiny():
    config = tiny_model()
    return config, init_weights(config, seed=3)


@pytest.fixture(scope='session')
def small_dataset_dir(tmp_path_factory):
    """A 16x16 grade dataset: 48 train / 12 test images per grade."""
    out = tmp_path_factory.mktemp('small_dataset')
    generate_dataset(GenerationConfig(out_dir=out, train_per_class=48, test_per_class=12,
                                      image_size=16, seed=11))
    return out


@pytest.fixture(scope='session')
def small_dataset(small_dataset_dir):
    return load_dataset(small_dataset_dir, 'grade')
