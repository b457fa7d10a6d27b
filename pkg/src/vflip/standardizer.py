# ℋ^train 的逐列标准化（总体标准差，下限 1e-8）
from dataclasses import dataclass

import numpy as np

from src.nn.mlp import as_matrix
from src.utils.errors import DataError, ShapeError

STD_FLOOR = 1e-8


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    def _check(self, values: np.ndarray) -> np.ndarray:
        matrix = as_matrix(values, "嵌入")
        if matrix.shape[1] != self.dim:
            raise ShapeError(f"嵌入列数 {matrix.shape[1]} 与标准化器维度 {self.dim} 不一致")
        return matrix

    def transform(self, values) -> np.ndarray:
        return (self._check(values) - self.mean) / self.std

    def inverse(self, values) -> np.ndarray:
        return self._check(values) * self.std + self.mean


def fit_standardizer(h_train) -> Standardizer:
    """按列计算均值与总体标准差"""
    matrix = as_matrix(h_train, "ℋ^train")
    if matrix.shape[0] < 2:
        raise DataError(f"拟合标准化器至少需要 2 行，当前为 {matrix.shape[0]}")
    return Standardizer(mean=matrix.mean(axis=0), std=np.maximum(matrix.std(axis=0), STD_FLOOR))
