"""
净化：把被标记的块在标准化空间置 0，经 MAE 重建后作为顶部模型输入
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.nn.mlp import as_matrix, check_finite
from src.utils.errors import ConfigurationError, ShapeError
from src.utils.logger import logger
from src.vflip.identification import identify_batch
from src.vflip.mae import Mae
from src.vflip.masks import row_block_mask
from src.vflip.scoring import STANDARDIZED, ThresholdTable, anomaly_scores_batch

RECONSTRUCT_ALL = "reconstruct_all"
REPLACE_FLAGGED_ONLY = "replace_flagged_only"
PURIFY_MODES = (RECONSTRUCT_ALL, REPLACE_FLAGGED_ONLY)


def resolve_all_flagged(flags: np.ndarray, votes: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    全部块都被标记的行：取消票数最少的块（并列取下标最小）

    Returns:
        (修正后的 flags, 触发回退的行)
    """
    flags = np.array(flags, dtype=bool, copy=True)
    all_flagged = flags.all(axis=1)
    if all_flagged.any():
        votes = np.zeros(flags.shape) if votes is None else np.asarray(votes)
        rows = np.flatnonzero(all_flagged)
        flags[rows, np.argmin(votes[rows], axis=1)] = False
    return flags, all_flagged


def purify_batch(
    mae: Mae,
    h_rows,
    flags: np.ndarray,
    votes: Optional[np.ndarray] = None,
    mode: str = RECONSTRUCT_ALL,
) -> Tuple[np.ndarray, int]:
    """
    Returns:
        (原始空间的净化结果, 全标记回退的行数)
    """
    if mode not in PURIFY_MODES:
        raise ConfigurationError(f"不支持的净化模式: {mode}")
    rows = as_matrix(h_rows, "嵌入")
    flags = np.asarray(flags, dtype=bool)
    if flags.shape != (rows.shape[0], mae.n_participants):
        raise ShapeError(f"标记形状 {flags.shape} 应为 ({rows.shape[0]}, {mae.n_participants})")
    flags, fallback = resolve_all_flagged(flags, votes)
    n_fallback = int(fallback.sum())
    if n_fallback:
        logger.warning(f"{n_fallback} 行的全部块都被标记，已保留票数最少的块再重建")

    z = mae.standardizer.transform(rows)
    removed = row_block_mask(flags, mae.embedding_dim)
    masked = np.where(removed > 0, 0.0, z)
    purified = mae.standardizer.inverse(mae.reconstruct(masked))
    if mode == REPLACE_FLAGGED_ONLY:
        # 未标记的块原样保留输入值
        purified = np.where(removed > 0, purified, rows)
    return check_finite(purified, "净化输出"), n_fallback


def purify(mae: Mae, h_row, flags, votes=None, mode: str = RECONSTRUCT_ALL) -> np.ndarray:
    row = np.asarray(h_row, dtype=np.float64).reshape(1, -1)
    vote_row = None if votes is None else np.asarray(votes).reshape(1, -1)
    return purify_batch(mae, row, np.asarray(flags).reshape(1, -1), vote_row, mode)[0][0]


@dataclass(frozen=True)
class DefenseInspection:
    scores: np.ndarray
    votes: np.ndarray
    flagged: np.ndarray

    @property
    def n_fallback(self) -> int:
        """全部块都被标记、净化时需要回退的行数"""
        return int(self.flagged.all(axis=1).sum()) if self.flagged.size else 0


@dataclass(frozen=True)
class DefenseOutcome:
    purified: np.ndarray
    inspection: DefenseInspection
    n_fallback: int


class VflipDefense:
    """推理阶段防御回调：异常分数 → 多数投票 → 净化；调用之间不保留状态"""

    def __init__(self, mae: Mae, thresholds: ThresholdTable, mode: str = RECONSTRUCT_ALL, space: str = STANDARDIZED):
        if thresholds.n_participants != mae.n_participants:
            raise ShapeError("阈值表的参与方数量与 MAE 不一致")
        if mode not in PURIFY_MODES:
            raise ConfigurationError(f"不支持的净化模式: {mode}")
        self.mae = mae
        self.thresholds = thresholds
        self.mode = mode
        self.space = space

    def inspect(self, h_rows) -> DefenseInspection:
        scores = anomaly_scores_batch(self.mae, h_rows, self.space)
        votes, flagged = identify_batch(scores, self.thresholds)
        return DefenseInspection(scores=scores, votes=votes, flagged=flagged)

    def apply(self, h_rows) -> DefenseOutcome:
        inspection = self.inspect(h_rows)
        purified, n_fallback = purify_batch(self.mae, h_rows, inspection.flagged, inspection.votes, self.mode)
        return DefenseOutcome(purified=purified, inspection=inspection, n_fallback=n_fallback)

    def __call__(self, h_rows: np.ndarray) -> np.ndarray:
        return self.apply(h_rows).purified


def defend(mae: Mae, thresholds: ThresholdTable, h_row, mode: str = RECONSTRUCT_ALL, space: str = STANDARDIZED) -> np.ndarray:
    """单行防御"""
    row = np.asarray(h_row, dtype=np.float64).reshape(1, -1)
    return VflipDefense(mae, thresholds, mode, space)(row)[0]
