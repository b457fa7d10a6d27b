"""
纵向联邦学习会话状态：N 个底部模型、服务器端顶部模型以及训练超参数
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from src.nn.mlp import Mlp, SgdConfig, mlp_init
from src.utils.errors import ConfigurationError, ShapeError
from src.utils.rng import derive_rng, derive_seed


@dataclass
class VflSession:
    """N 个底部模型 + 1 个顶部模型（拼接聚合）"""
    bottom_models: List[Mlp]
    top_model: Mlp
    sgd: SgdConfig
    embedding_dim: int
    n_classes: int
    seed: int
    lr_scale: np.ndarray
    epochs_trained: int = 0
    rng: np.random.Generator = field(repr=False, default=None)
    # 服务器持有的训练标签，由 train_vfl 写入
    labels: Optional[np.ndarray] = field(repr=False, default=None)

    def __post_init__(self):
        if self.rng is None:
            self.rng = derive_rng(self.seed, "session.batches")
        if len(self.bottom_models) < 2:
            raise ConfigurationError("VFL 会话至少需要 2 个参与方")
        for i, model in enumerate(self.bottom_models):
            if model.output_dim != self.embedding_dim:
                raise ShapeError(f"参与方 {i} 的嵌入维度 {model.output_dim} 不等于 {self.embedding_dim}")
        if self.top_model.input_dim != self.n_participants * self.embedding_dim:
            raise ShapeError(
                f"顶部模型输入维度 {self.top_model.input_dim} 不等于 N×d = "
                f"{self.n_participants * self.embedding_dim}"
            )
        if self.top_model.output_dim != self.n_classes:
            raise ShapeError(f"顶部模型输出维度 {self.top_model.output_dim} 不等于类别数 {self.n_classes}")
        self.lr_scale = np.asarray(self.lr_scale, dtype=np.float64)
        if self.lr_scale.shape != (self.n_participants,) or np.any(self.lr_scale <= 0):
            raise ConfigurationError(f"lr_scale 必须是长度为 N 的正数向量，当前为 {self.lr_scale}")

    @property
    def n_participants(self) -> int:
        return len(self.bottom_models)

    @property
    def concat_dim(self) -> int:
        return self.n_participants * self.embedding_dim

    def block_slice(self, participant: int) -> slice:
        start = participant * self.embedding_dim
        return slice(start, start + self.embedding_dim)

    def participant_sgd(self, participant: int) -> SgdConfig:
        return self.sgd.scaled(float(self.lr_scale[participant]))

    def reset_lr_scale(self):
        self.lr_scale = np.ones(self.n_participants, dtype=np.float64)


def fcn_dims(in_dim: int, hidden: int, out_dim: int, n_layers: int) -> List[int]:
    """n_layers 个全连接层的维度列表"""
    if n_layers < 1:
        raise ConfigurationError(f"层数必须 >= 1，当前为 {n_layers}")
    return [in_dim] + [hidden] * (n_layers - 1) + [out_dim]


def create_session(
    block_widths: Sequence[int],
    embedding_dim: int,
    n_classes: int,
    sgd: SgdConfig,
    seed: int = 0,
    bottom_layers: int = 4,
    bottom_hidden: int = 64,
    top_layers: int = 3,
    top_hidden: int = 64,
) -> VflSession:
    """
    按参与方特征宽度构建会话

    Args:
        block_widths: 各参与方的特征列数
        embedding_dim: 每个参与方的嵌入维度 d
        n_classes: 类别数
        sgd: SGD 配置
        seed: 会话种子（模型初始化与批次顺序均由其派生）
        bottom_layers / bottom_hidden: 底部 FCN 层数与隐藏宽度
        top_layers / top_hidden: 顶部 FCN 层数与隐藏宽度
    """
    n_participants = len(block_widths)
    bottoms = [
        mlp_init(fcn_dims(int(width), bottom_hidden, embedding_dim, bottom_layers), seed=derive_seed(seed, f"bottom.{i}"))
        for i, width in enumerate(block_widths)
    ]
    top = mlp_init(
        fcn_dims(n_participants * embedding_dim, top_hidden, n_classes, top_layers),
        seed=derive_seed(seed, "top"),
    )
    return VflSession(
        bottom_models=bottoms,
        top_model=top,
        sgd=sgd,
        embedding_dim=embedding_dim,
        n_classes=n_classes,
        seed=seed,
        lr_scale=np.ones(n_participants, dtype=np.float64),
    )


@dataclass
class EmbeddingBatch:
    """各参与方上传的嵌入块，按 idx 行对齐"""
    blocks: List[np.ndarray]
    idx: np.ndarray

    @property
    def concatenated(self) -> np.ndarray:
        return np.concatenate(self.blocks, axis=1)

    @property
    def n_rows(self) -> int:
        return int(self.idx.shape[0])


@dataclass
class GradientBatch:
    """服务器回传给各参与方的嵌入梯度块"""
    blocks: List[np.ndarray]

    def matches(self, embeddings: EmbeddingBatch) -> bool:
        return len(self.blocks) == len(embeddings.blocks) and all(
            g.shape == h.shape for g, h in zip(self.blocks, embeddings.blocks)
        )


@dataclass
class EmbeddingStore:
    """ℋ^train：最后一轮训练中服务器看到的拼接嵌入，每个训练样本一行"""
    embeddings: np.ndarray
    labels: np.ndarray
    n_participants: int
    embedding_dim: int

    @property
    def n_rows(self) -> int:
        return int(self.embeddings.shape[0])
