"""
基于交换的标签推断

主攻击者对候选样本先观察其真实嵌入的梯度幅值 g_prev，在后续一步中把该行替换为
一个已知目标标签的辅助样本嵌入并观察 g_swap：
g_prev 小于批内平均幅值且 g_swap < 10 × g_prev 时判为目标标签样本。
"""
from typing import Optional

import numpy as np

from src.attacks.plan import NON_TARGET, TARGET, UNKNOWN, InferredLabels
from src.utils.errors import ConfigurationError

SWAP_RATIO = 10.0
CANDIDATE_FACTOR = 3.0


def swap_decision(g_prev: float, batch_mean: float, g_swap: float) -> bool:
    """交换判定规则：两个条件同时成立才判为目标标签"""
    return g_prev < batch_mean and g_swap < SWAP_RATIO * g_prev


def candidate_count(budget: float, batch_size: int) -> int:
    """每个小批次的候选数 = round(3 × budget × batch_size)"""
    return int(round(CANDIDATE_FACTOR * budget * batch_size))


class SwapLabelInference:
    """交换式标签推断的状态机（每个样本先观察、下一次出现时交换并判定）"""

    def __init__(self, n_train: int, aux_target_embeddings: np.ndarray, budget: float, batch_size: int, rng: np.random.Generator):
        """
        Args:
            n_train: 训练样本数
            aux_target_embeddings: 已知目标标签辅助样本的嵌入（由攻击者当前底部模型计算）
            budget: 投毒预算
            batch_size: 小批次大小
            rng: 随机数流
        """
        if aux_target_embeddings is None or len(aux_target_embeddings) == 0:
            raise ConfigurationError("标签推断需要至少一个已知目标标签的辅助样本")
        self.aux_target_embeddings = np.asarray(aux_target_embeddings, dtype=np.float64)
        self.n_candidates = max(1, candidate_count(budget, batch_size))
        self.rng = rng
        self.inferred = InferredLabels.unknown(n_train)
        self.g_prev = np.full(n_train, np.nan)
        self.below_mean = np.zeros(n_train, dtype=bool)
        self.pending = np.zeros(n_train, dtype=bool)
        self._swapped: Optional[np.ndarray] = None
        self._fresh: Optional[np.ndarray] = None

    def refresh_aux(self, aux_target_embeddings: np.ndarray):
        """底部模型更新后重新计算辅助嵌入"""
        if len(aux_target_embeddings):
            self.aux_target_embeddings = np.asarray(aux_target_embeddings, dtype=np.float64)

    def prepare_batch(self, idx: np.ndarray, h_block: np.ndarray) -> np.ndarray:
        """
        选出本批次的交换行与新候选行，返回替换后的上传嵌入
        """
        pending_pos = np.flatnonzero(self.pending[idx])
        undecided = (self.inferred.flags[idx] == UNKNOWN) & ~self.pending[idx]
        fresh_pool = np.flatnonzero(undecided)
        n_fresh = min(max(self.n_candidates - pending_pos.size, 0), fresh_pool.size)
        fresh_pos = self.rng.choice(fresh_pool, size=n_fresh, replace=False) if n_fresh else np.zeros(0, dtype=np.int64)

        uploaded = h_block.copy()
        if pending_pos.size:
            donors = self.rng.integers(0, len(self.aux_target_embeddings), size=pending_pos.size)
            uploaded[pending_pos] = self.aux_target_embeddings[donors]
        self._swapped = pending_pos
        self._fresh = np.sort(fresh_pos)
        return uploaded

    def observe(self, idx: np.ndarray, grad_block: np.ndarray) -> np.ndarray:
        """
        根据服务器回传的梯度更新推断状态，返回用于本地反向传播的梯度（交换行清零）
        """
        magnitudes = np.linalg.norm(grad_block, axis=1)
        swapped = self._swapped if self._swapped is not None else np.zeros(0, dtype=np.int64)
        fresh = self._fresh if self._fresh is not None else np.zeros(0, dtype=np.int64)
        genuine = np.ones(idx.shape[0], dtype=bool)
        genuine[swapped] = False
        batch_mean = float(magnitudes[genuine].mean()) if genuine.any() else float("inf")

        for pos in fresh:
            row = idx[pos]
            self.g_prev[row] = magnitudes[pos]
            self.below_mean[row] = magnitudes[pos] < batch_mean
            self.pending[row] = True

        for pos in swapped:
            row = idx[pos]
            is_target = bool(self.below_mean[row]) and magnitudes[pos] < SWAP_RATIO * self.g_prev[row]
            self.inferred.flags[row] = TARGET if is_target else NON_TARGET
            self.pending[row] = False

        self._swapped, self._fresh = None, None
        local_grad = grad_block.copy()
        local_grad[swapped] = 0.0
        return local_grad
