"""
多数投票识别

s_{j→i} > tᵢ 时块 i 得一票；票数严格大于 N/2 时判定块 i 被植入触发器。
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple, Union

import numpy as np

from src.utils.errors import ShapeError
from src.utils.logger import logger
from src.vflip.scoring import ThresholdTable


@dataclass(frozen=True)
class IdentificationResult:
    votes: np.ndarray
    flagged: np.ndarray
    scores: np.ndarray

    @property
    def flagged_participants(self) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.flagged))


@lru_cache(maxsize=None)
def warn_unvotable(n_participants: int) -> bool:
    """N=2 时票数最多为 1，永远无法超过 N/2"""
    if n_participants <= 2:
        logger.warning(f"N={n_participants} 时多数投票永远不会标记任何参与方，VFLIP 识别不起作用")
        return True
    return False


def _threshold_vector(thresholds: Union[ThresholdTable, np.ndarray]) -> np.ndarray:
    if isinstance(thresholds, ThresholdTable):
        return thresholds.thresholds
    return np.asarray(thresholds, dtype=np.float64)


def vote_counts(scores: np.ndarray, thresholds: Union[ThresholdTable, np.ndarray]) -> np.ndarray:
    """scores 形状 (..., N, N)，返回 (..., N) 的票数；对角线 NaN 不计票"""
    t = _threshold_vector(thresholds)
    n = scores.shape[-1]
    if scores.shape[-2] != n or t.shape != (n,):
        raise ShapeError(f"分数形状 {scores.shape} 与阈值形状 {t.shape} 不一致")
    with np.errstate(invalid="ignore"):
        exceeds = scores > t
    off_diagonal = ~np.eye(n, dtype=bool)
    return np.sum(exceeds & off_diagonal, axis=-2)


def majority(votes: np.ndarray, n_participants: int) -> np.ndarray:
    return votes > n_participants / 2


def identify_batch(scores: np.ndarray, thresholds: Union[ThresholdTable, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """批量识别，返回 (votes (K, N), flagged (K, N))"""
    n = scores.shape[-1]
    warn_unvotable(n)
    votes = vote_counts(scores, thresholds)
    return votes, majority(votes, n)


def identify(scores: np.ndarray, thresholds: Union[ThresholdTable, np.ndarray], n_participants: int) -> IdentificationResult:
    if scores.shape != (n_participants, n_participants):
        raise ShapeError(f"分数表形状 {scores.shape} 应为 ({n_participants}, {n_participants})")
    warn_unvotable(n_participants)
    votes = vote_counts(scores, thresholds)
    return IdentificationResult(votes=votes, flagged=majority(votes, n_participants), scores=scores)
