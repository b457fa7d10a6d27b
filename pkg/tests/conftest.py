# 测试公共夹具：小规模数据集、小型会话与快速实验配置
import os

import numpy as np
import pytest

from src.config.experiment_config import load_config
from src.config.settings import Config
from src.data.partition import partition_vertical
from src.data.synthetic import generate_synthetic
from src.nn.mlp import SgdConfig
from src.vfl.session import create_session

SLOW_ENABLED = os.getenv("VFL_LAB_SLOW", "0") == "1"

# 小规模实验：几秒内跑完的完整流程
FAST_OVERRIDES = [
    "data.n_classes=3",
    "data.dim=12",
    "data.k_train=360",
    "data.k_test=120",
    "data.k_aux=60",
    "vfl.n_participants=4",
    "vfl.embedding_dim=4",
    "vfl.epochs=4",
    "vfl.batch_size=32",
    "vfl.bottom_layers=2",
    "vfl.bottom_hidden=16",
    "vfl.top_layers=2",
    "vfl.top_hidden=16",
    "attack.e_bkd=1",
    "attack.trigger_width=2",
    "defense.mae_epochs=2",
    "defense.mae_hidden=16",
    "defense.mae_latent=8",
    "eval.seeds=0",
]


def pytest_collection_modifyitems(config, items):
    if SLOW_ENABLED:
        return
    skip_slow = pytest.mark.skip(reason="设置 VFL_LAB_SLOW=1 以运行验收规模测试")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def quiet_progress(monkeypatch):
    monkeypatch.setattr(Config, "SHOW_PROGRESS", False)


@pytest.fixture
def tiny_dataset():
    return generate_synthetic(n_classes=3, dim=12, k_train=300, k_test=90, k_aux=30, seed=1, normalize=True)


@pytest.fixture
def tiny_data(tiny_dataset):
    return partition_vertical(tiny_dataset, 4, (300 / 420, 90 / 420, 30 / 420), seed=2)


@pytest.fixture
def tiny_session(tiny_data):
    widths = [tiny_data.spec.block_width(i) for i in range(4)]
    return create_session(
        widths,
        embedding_dim=4,
        n_classes=3,
        sgd=SgdConfig(learning_rate=0.1, batch_size=32),
        seed=0,
        bottom_layers=2,
        bottom_hidden=8,
        top_layers=2,
        top_hidden=8,
    )


@pytest.fixture
def fast_config():
    def build(*extra: str):
        return load_config(None, FAST_OVERRIDES + list(extra))
    return build


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
