"""
VILLAIN：嵌入级后门

触发器由攻击者自己的干净嵌入统计量构造：选取标准差最大的 M 个维度，
按 [+σ̄, +σ̄, −σ̄, −σ̄, ...] × γ 叠加；训练时做随机缩放和按维度丢弃增强。
"""
import numpy as np

from src.attacks.plan import TriggerSpec
from src.utils.errors import ConfigurationError


def villain_pattern(sigma_bar: float, gamma: float, m: int) -> np.ndarray:
    """符号按 (+, +, −, −) 循环"""
    signs = np.where((np.arange(m) // 2) % 2 == 0, 1.0, -1.0)
    return gamma * sigma_bar * signs


def villain_build_trigger(
    clean_embeddings: np.ndarray,
    m_fraction: float = 0.75,
    gamma: float = 3.0,
    aug_drop_prob: float = 0.1,
    aug_scale_range=(0.6, 1.2),
) -> TriggerSpec:
    """
    由攻击者干净嵌入构造触发器

    Args:
        clean_embeddings: 攻击者自己的嵌入 (rows × d)，至少 2 行
        m_fraction: 触发维度占比，M = round(m_fraction × d)
        gamma: 触发幅度倍数
    """
    embeddings = np.asarray(clean_embeddings, dtype=np.float64)
    if embeddings.ndim != 2 or embeddings.shape[0] < 2:
        raise ConfigurationError(f"构造触发器至少需要 2 行干净嵌入，当前形状为 {embeddings.shape}")
    d = embeddings.shape[1]
    m = min(d, max(1, int(round(m_fraction * d))))

    stds = embeddings.std(axis=0)
    dims = np.argsort(-stds, kind="stable")[:m]
    sigma_bar = float(stds[dims].mean())
    return TriggerSpec(
        dims=dims.astype(np.int64),
        value_pattern=villain_pattern(sigma_bar, gamma, m),
        gamma=float(gamma),
        sigma_bar=sigma_bar,
        aug_drop_prob=float(aug_drop_prob),
        aug_scale_range=(float(aug_scale_range[0]), float(aug_scale_range[1])),
    )


def villain_inject(
    h_block: np.ndarray,
    rows: np.ndarray,
    trigger: TriggerSpec,
    rng: np.random.Generator = None,
    augment: bool = False,
) -> np.ndarray:
    """
    在 rows 行叠加触发器（返回副本）

    augment=True 时每行独立抽取缩放 λ ∈ aug_scale_range，并以 aug_drop_prob 丢弃单个维度
    """
    injected = h_block.copy()
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        return injected
    delta = np.tile(trigger.value_pattern, (rows.size, 1))
    if augment:
        if rng is None:
            raise ConfigurationError("触发器增强需要随机数流")
        low, high = trigger.aug_scale_range
        delta *= rng.uniform(low, high, size=(rows.size, 1))
        delta *= rng.random(delta.shape) >= trigger.aug_drop_prob
    injected[rows[:, None], trigger.dims[None, :]] += delta
    return injected
