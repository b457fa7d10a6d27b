# 自适应攻击：最后一轮额外在非目标样本上投放触发器，压低正常样本与中毒样本的异常分差
import numpy as np

from src.attacks.plan import NON_TARGET


def adaptive_schedule(epoch: int, total_epochs: int, eta: float, label_flags: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """
    返回批次内额外投放触发器的行

    仅在最后一轮生效，每个推断为非目标的行以概率 eta 被选中
    """
    if eta <= 0 or epoch != total_epochs:
        return np.zeros(0, dtype=np.int64)
    non_target = np.asarray(label_flags) == NON_TARGET
    return np.flatnonzero(non_target & (rng.random(non_target.shape[0]) < eta))
