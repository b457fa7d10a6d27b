"""
参与方块掩码

拼接嵌入按参与方分为 N 个长度为 d 的连续块；mᵢ 只在块 i 上为 1，m̃ᵢ 为其补。
被掩码的块在标准化空间中置 0（即原始空间的训练均值）。
"""
from dataclasses import dataclass
from typing import FrozenSet, Iterable

import numpy as np

from src.utils.errors import ConfigurationError


@dataclass(frozen=True)
class MaskVector:
    participants: FrozenSet[int]
    n_participants: int
    embedding_dim: int

    def __post_init__(self):
        bad = [i for i in self.participants if not 0 <= i < self.n_participants]
        if bad:
            raise ConfigurationError(f"掩码中的参与方 {bad} 超出范围 [0, {self.n_participants})")

    @classmethod
    def of(cls, participants: Iterable[int], n_participants: int, embedding_dim: int) -> "MaskVector":
        return cls(frozenset(int(i) for i in participants), n_participants, embedding_dim)

    @property
    def vector(self) -> np.ndarray:
        return block_mask(self.participants, self.n_participants, self.embedding_dim)

    def complement(self) -> "MaskVector":
        rest = frozenset(range(self.n_participants)) - self.participants
        return MaskVector(rest, self.n_participants, self.embedding_dim)


def block_mask(participants: Iterable[int], n_participants: int, embedding_dim: int) -> np.ndarray:
    """participants 所在块为 1、其余为 0 的向量（长度 N·d）"""
    mask = np.zeros(n_participants * embedding_dim, dtype=np.float64)
    for i in participants:
        mask[i * embedding_dim:(i + 1) * embedding_dim] = 1.0
    return mask


def drop_block(z: np.ndarray, participant: int, embedding_dim: int) -> np.ndarray:
    """m̃ᵢ ⊙ z：只把块 i 置 0"""
    masked = z.copy()
    masked[:, participant * embedding_dim:(participant + 1) * embedding_dim] = 0.0
    return masked


def keep_block(z: np.ndarray, participant: int, embedding_dim: int) -> np.ndarray:
    """mⱼ ⊙ z：只保留块 j"""
    masked = np.zeros_like(z)
    cols = slice(participant * embedding_dim, (participant + 1) * embedding_dim)
    masked[:, cols] = z[:, cols]
    return masked


def row_block_mask(flags: np.ndarray, embedding_dim: int) -> np.ndarray:
    """把 (K, N) 的布尔块标记展开成 (K, N·d) 的 0/1 掩码"""
    return np.repeat(np.asarray(flags, dtype=np.float64), embedding_dim, axis=1)
