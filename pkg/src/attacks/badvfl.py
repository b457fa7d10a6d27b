"""
BadVFL：数据级后门

训练时把选中的目标标签样本的攻击者特征块替换为某个非目标样本的特征块，
再在固定窗口上写入触发器；推理时对全部样本写入同一触发器。
"""
from typing import Optional

import numpy as np

from src.attacks.plan import FeatureTriggerSpec
from src.utils.errors import ConfigurationError
from src.utils.logger import logger


def build_feature_trigger(block_width: int, width: int = 8, value: float = 1.0) -> FeatureTriggerSpec:
    """窗口放在攻击者特征块的开头，宽度超过块宽时截断"""
    if block_width < 1:
        raise ConfigurationError(f"攻击者特征块宽度必须 >= 1，当前为 {block_width}")
    return FeatureTriggerSpec(start=0, end=min(width, block_width), value=value)


def stamp_trigger(x_block: np.ndarray, rows: np.ndarray, trigger: FeatureTriggerSpec) -> np.ndarray:
    """在 rows 行的触发窗口写入常数值（返回副本）"""
    stamped = x_block.copy()
    if len(rows):
        stamped[np.asarray(rows)[:, None], np.arange(trigger.start, trigger.end)[None, :]] = trigger.value
    return stamped


def badvfl_poison(
    x_block: np.ndarray,
    rows: np.ndarray,
    donors: Optional[np.ndarray],
    trigger: FeatureTriggerSpec,
) -> np.ndarray:
    """
    对批次中的 rows 行执行"替换 + 打触发器"

    Args:
        x_block: 攻击者本地批次特征
        rows: 批次内要投毒的行
        donors: 与 rows 等长的非目标样本特征块
        trigger: 特征触发器

    Returns:
        修改后的批次副本；rows 为空或没有可用的非目标样本时原样返回
    """
    if len(rows) == 0:
        return x_block
    if donors is None or len(donors) == 0:
        logger.warning("没有推断为非目标标签的样本可供替换，跳过本批次的 BadVFL 投毒")
        return x_block
    if len(donors) != len(rows):
        raise ConfigurationError(f"替换样本数 {len(donors)} 与投毒行数 {len(rows)} 不一致")
    poisoned = x_block.copy()
    poisoned[rows] = donors
    return stamp_trigger(poisoned, rows, trigger)
