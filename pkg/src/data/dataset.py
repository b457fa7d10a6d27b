# 数据集类型定义
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from src.utils.errors import ConfigurationError, DataError


@dataclass(frozen=True)
class Dataset:
    """带标签的数据集：features (K × D)，labels 长度为 K"""
    features: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise DataError(f"features 必须是非空二维矩阵，当前形状为 {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise DataError(f"标签数量 {self.labels.shape} 与样本数 {self.features.shape[0]} 不一致")
        bad = np.flatnonzero((self.labels < 0) | (self.labels >= self.n_classes))
        if bad.size:
            raise DataError(f"标签 {int(self.labels[bad[0]])} 超出范围 [0, {self.n_classes})", row=int(bad[0]))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class PartitionSpec:
    """纵向划分方案：每个参与方一个连续列区间 [start, end)"""
    n_participants: int
    column_ranges: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        if self.n_participants < 2:
            raise ConfigurationError(f"参与方数量必须 >= 2，当前为 {self.n_participants}")
        if len(self.column_ranges) != self.n_participants:
            raise ConfigurationError("列区间数量与参与方数量不一致")
        cursor = 0
        for start, end in self.column_ranges:
            if start != cursor or end <= start:
                raise ConfigurationError(f"列区间必须连续、有序且非空: {self.column_ranges}")
            cursor = end

    @property
    def n_features(self) -> int:
        return self.column_ranges[-1][1]

    def block_width(self, participant: int) -> int:
        start, end = self.column_ranges[participant]
        return end - start


@dataclass(frozen=True)
class SplitData:
    """一个数据划分（train/test/aux）：各参与方的特征块按同一行序对齐"""
    blocks: List[np.ndarray]
    labels: np.ndarray
    row_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def n_rows(self) -> int:
        return int(self.labels.shape[0])

    def joined(self) -> np.ndarray:
        """按参与方顺序拼接回完整特征矩阵"""
        return np.concatenate(self.blocks, axis=1)

    def subset(self, positions: np.ndarray) -> "SplitData":
        positions = np.asarray(positions, dtype=np.int64)
        return SplitData(
            blocks=[block[positions] for block in self.blocks],
            labels=self.labels[positions],
            row_ids=self.row_ids[positions] if self.row_ids.size else self.row_ids,
        )


@dataclass(frozen=True)
class PartitionedDataset:
    """纵向划分后的数据集"""
    train: SplitData
    test: SplitData
    aux: SplitData
    spec: PartitionSpec
    n_classes: int


def minmax_normalize(features: np.ndarray) -> np.ndarray:
    """按列 min-max 归一化到 [0, 1]；常数列归一化为 0"""
    lo = features.min(axis=0)
    span = features.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (features - lo) / safe, 0.0)
