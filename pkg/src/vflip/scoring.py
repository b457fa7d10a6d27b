"""
异常分数与阈值

s_{j→i} = ‖ MAE(mⱼ ⊙ z)[块 i] − z[块 i] ‖₂，每行 N 次前向（每个来源 j 一次）。
阈值 tᵢ = μᵢ + ρ·σᵢ，μᵢ、σᵢ 为 ℋ^train 上全部 s_{j→i}（j≠i）的均值与总体标准差。
"""
from dataclasses import dataclass

import numpy as np

from src.nn.mlp import as_matrix
from src.utils.errors import ConfigurationError, DataError, ShapeError
from src.utils.log_utils import log_operation
from src.utils.logger import logger
from src.vflip.mae import Mae
from src.vflip.masks import keep_block

STANDARDIZED = "standardized"
RAW = "raw"
SCORE_SPACES = (STANDARDIZED, RAW)


def anomaly_scores_batch(mae: Mae, h_rows, space: str = STANDARDIZED) -> np.ndarray:
    """
    批量计算异常分数

    Returns:
        (K, N, N) 数组，scores[:, j, i] = s_{j→i}，对角线为 NaN
    """
    if space not in SCORE_SPACES:
        raise ConfigurationError(f"不支持的分数空间: {space}")
    rows = as_matrix(h_rows, "嵌入")
    if rows.shape[1] != mae.width:
        raise ShapeError(f"嵌入宽度 {rows.shape[1]} 与 MAE 宽度 N·d = {mae.width} 不一致")

    n, d = mae.n_participants, mae.embedding_dim
    z = mae.standardizer.transform(rows)
    scores = np.full((rows.shape[0], n, n), np.nan)
    for j in range(n):
        diff = mae.reconstruct(keep_block(z, j, d)) - z
        if space == RAW:
            diff = diff * mae.standardizer.std
        for i in range(n):
            if i != j:
                scores[:, j, i] = np.linalg.norm(diff[:, mae.block(i)], axis=1)
    return scores


def anomaly_scores(mae: Mae, h_row, space: str = STANDARDIZED) -> np.ndarray:
    """单行版本，返回 N×N 分数表"""
    row = np.asarray(h_row, dtype=np.float64)
    if row.ndim != 1:
        raise ShapeError(f"h_row 必须是一维向量，当前形状为 {row.shape}")
    return anomaly_scores_batch(mae, row.reshape(1, -1), space)[0]


@dataclass(frozen=True)
class ThresholdTable:
    mu: np.ndarray
    sigma: np.ndarray
    rho: float

    @property
    def thresholds(self) -> np.ndarray:
        return self.mu + self.rho * self.sigma

    @property
    def n_participants(self) -> int:
        return int(self.mu.shape[0])

    def with_rho(self, rho: float) -> "ThresholdTable":
        """复用同一组分数统计量，只换 ρ"""
        return ThresholdTable(mu=self.mu, sigma=self.sigma, rho=float(rho))


def thresholds_from_scores(scores: np.ndarray, rho: float) -> ThresholdTable:
    """对每个目标 i 汇总所有行、所有 j≠i 的分数"""
    if scores.ndim != 3 or scores.shape[1] != scores.shape[2]:
        raise ShapeError(f"分数必须是 (K, N, N) 数组，当前形状为 {scores.shape}")
    if scores.shape[0] == 0:
        raise DataError("ℋ^train 为空，无法拟合阈值")
    if rho < 0:
        raise ConfigurationError(f"rho 必须 >= 0，当前为 {rho}")
    n = scores.shape[1]
    mu, sigma = np.zeros(n), np.zeros(n)
    for i in range(n):
        pooled = np.delete(scores[:, :, i], i, axis=1).reshape(-1)
        mu[i], sigma[i] = pooled.mean(), pooled.std()
    return ThresholdTable(mu=mu, sigma=sigma, rho=float(rho))


@log_operation("阈值拟合")
def fit_thresholds(mae: Mae, h_train, rho: float = 2.0, space: str = STANDARDIZED) -> ThresholdTable:
    rows = as_matrix(h_train, "ℋ^train")
    if rows.shape[0] == 0:
        raise DataError("ℋ^train 为空，无法拟合阈值")
    table = thresholds_from_scores(anomaly_scores_batch(mae, rows, space), rho)
    logger.info(f"阈值 (ρ={rho}): {np.round(table.thresholds, 4).tolist()}")
    return table
