"""
Fixtures partagées : petits datasets synthétiques et petites configurations
"""

import pytest
import torch

from src.modules.adversarial import VaeGanConfig
from src.modules.csnet import CSNetConfig
from src.modules.dataio import SyntheticSpec, generate_synthetic, write_dataset
from src.modules.trainer import TrainConfig

FEATURE_DIM = 8


@pytest.fixture(autouse=True)
def _single_thread():
    torch.set_num_threads(1)


@pytest.fixture
def tiny_spec():
    return SyntheticSpec(n_videos=6, min_steps=24, max_steps=32, feature_dim=FEATURE_DIM, n_users=2,
                         min_segments=3, max_segments=5, min_segment_steps=4, seed=0)


@pytest.fixture
def tiny_dataset(tiny_spec):
    return generate_synthetic(tiny_spec)


@pytest.fixture
def tiny_train_config():
    return TrainConfig(
        max_epochs=2,
        lr_decay_epoch=1,
        csnet=CSNetConfig(input_dim=FEATURE_DIM, hidden_dim=8),
        vaegan=VaeGanConfig(feature_dim=FEATURE_DIM, hidden_dim=8, latent_dim=4, discriminator_dim=8),
    )


@pytest.fixture
def bundle_dir(tmp_path, tiny_dataset):
    return write_dataset(tiny_dataset, tmp_path / 'bundle')
