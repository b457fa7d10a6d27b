"""纵向划分：特征按连续近等宽列块分给各参与方，样本按比例切分为 train/test/aux（aux 按类别均衡）"""
from typing import List, Sequence, Tuple

import numpy as np

from src.data.dataset import Dataset, PartitionedDataset, PartitionSpec, SplitData
from src.utils.errors import ConfigurationError, DataError
from src.utils.logger import logger


def column_ranges(n_features: int, n_participants: int) -> Tuple[Tuple[int, int], ...]:
    """近等宽连续列块，前 D mod N 块各多 1 列"""
    if n_participants > n_features:
        raise ConfigurationError(f"参与方数量 {n_participants} 超过特征数 {n_features}")
    base, extra = divmod(n_features, n_participants)
    ranges = []
    start = 0
    for i in range(n_participants):
        width = base + (1 if i < extra else 0)
        ranges.append((start, start + width))
        start += width
    return tuple(ranges)


def _split_counts(n_rows: int, fractions: Sequence[float]) -> List[int]:
    counts = [int(round(f * n_rows)) for f in fractions[:-1]]
    counts.append(n_rows - sum(counts))
    return counts


def stratified_pick(labels: np.ndarray, n_pick: int, rng: np.random.Generator) -> np.ndarray:
    """按类别轮流抽取 n_pick 行，各类数量至多相差 1；某类样本不足时由其余类别补齐"""
    pools = [rng.permutation(np.flatnonzero(labels == c)) for c in np.unique(labels)]
    quota = np.zeros(len(pools), dtype=np.int64)
    remaining = int(n_pick)
    while remaining > 0:
        open_classes = [k for k, pool in enumerate(pools) if quota[k] < pool.shape[0]]
        if not open_classes:
            break
        for k in open_classes[:remaining]:
            quota[k] += 1
        remaining -= min(remaining, len(open_classes))
    return np.concatenate([pool[:q] for pool, q in zip(pools, quota)])


def partition_vertical(
    dataset: Dataset,
    n_participants: int,
    split_fractions: Sequence[float] = (0.8, 0.15, 0.05),
    seed: int = 0,
) -> PartitionedDataset:
    """
    纵向划分数据集

    Args:
        dataset: 源数据集
        n_participants: 参与方数量 N
        split_fractions: (train, test, aux) 比例，之和为 1
        seed: 行划分的随机种子

    Returns:
        PartitionedDataset，各划分内所有参与方行序一致
    """
    fractions = [float(f) for f in split_fractions]
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigurationError(f"split_fractions 必须是三个非负数且和为 1，当前为 {fractions}")

    spec = PartitionSpec(n_participants=n_participants, column_ranges=column_ranges(dataset.n_features, n_participants))

    rng = np.random.default_rng(seed)
    counts = _split_counts(dataset.n_samples, fractions)
    if min(counts) <= 0:
        raise ConfigurationError(f"划分后存在空的数据子集: {counts}")

    # aux 按类别均衡抽取，其余行打乱后切分为 train/test
    aux_ids = stratified_pick(dataset.labels, counts[2], rng)
    order = rng.permutation(dataset.n_samples)
    order = order[~np.isin(order, aux_ids)]
    parts = [order[:counts[0]], order[counts[0]:], aux_ids]

    splits = []
    for part in parts:
        row_ids = np.sort(part)
        splits.append(SplitData(
            blocks=[dataset.features[row_ids, start:end] for start, end in spec.column_ranges],
            labels=dataset.labels[row_ids],
            row_ids=row_ids,
        ))
    train, test, aux = splits

    missing = sorted(set(range(dataset.n_classes)) - set(np.unique(train.labels).tolist()))
    if missing:
        raise DataError(f"训练集缺少类别 {missing}")

    widths = [end - start for start, end in spec.column_ranges]
    logger.info(f"纵向划分完成: {n_participants} 个参与方，列宽 {widths}，train/test/aux = {counts}")
    return PartitionedDataset(train=train, test=test, aux=aux, spec=spec, n_classes=dataset.n_classes)
