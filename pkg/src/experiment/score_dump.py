"""
异常分数导出：每个 (行, 来源 j, 目标 i≠j) 一条记录，供离线画分布直方图
"""
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from src.experiment.artifacts import read_csv, write_csv
from src.utils.logger import logger
from src.vflip.mae import Mae
from src.vflip.scoring import STANDARDIZED, ThresholdTable, anomaly_scores_batch

SCORE_COLUMNS = ["row_id", "source_j", "target_i", "score", "threshold_i", "true_label", "triggered_flag"]


def _long_table(scores: np.ndarray, thresholds: np.ndarray, row_ids: np.ndarray, labels: np.ndarray, triggered: int) -> pd.DataFrame:
    n_rows, n, _ = scores.shape
    rows, sources, targets = np.meshgrid(np.arange(n_rows), np.arange(n), np.arange(n), indexing="ij")
    keep = (sources != targets).reshape(-1)
    rows, sources, targets = rows.reshape(-1)[keep], sources.reshape(-1)[keep], targets.reshape(-1)[keep]
    return pd.DataFrame({
        "row_id": row_ids[rows],
        "source_j": sources,
        "target_i": targets,
        "score": scores[rows, sources, targets],
        "threshold_i": thresholds[targets],
        "true_label": labels[rows],
        "triggered_flag": triggered,
    })


def score_table(
    mae: Mae,
    thresholds: ThresholdTable,
    clean_rows: np.ndarray,
    triggered_rows: np.ndarray,
    clean_labels: Optional[np.ndarray] = None,
    triggered_labels: Optional[np.ndarray] = None,
    clean_ids: Optional[np.ndarray] = None,
    triggered_ids: Optional[np.ndarray] = None,
    space: str = STANDARDIZED,
) -> pd.DataFrame:
    """干净行在前、触发行在后，共 (clean + triggered) × N × (N−1) 行"""
    parts = []
    for rows, labels, ids, flag in (
        (clean_rows, clean_labels, clean_ids, 0),
        (triggered_rows, triggered_labels, triggered_ids, 1),
    ):
        rows = np.asarray(rows, dtype=np.float64).reshape(-1, mae.width)
        k = rows.shape[0]
        labels = np.full(k, -1, dtype=np.int64) if labels is None else np.asarray(labels, dtype=np.int64)
        ids = np.arange(k, dtype=np.int64) if ids is None else np.asarray(ids, dtype=np.int64)
        parts.append(_long_table(anomaly_scores_batch(mae, rows, space), thresholds.thresholds, ids, labels, flag))
    return pd.concat(parts, ignore_index=True)[SCORE_COLUMNS]


def dump_scores(
    mae: Mae,
    thresholds: ThresholdTable,
    clean_rows: np.ndarray,
    triggered_rows: np.ndarray,
    path: Union[str, Path],
    config_digest: str = "",
    **table_kwargs,
) -> pd.DataFrame:
    table = score_table(mae, thresholds, clean_rows, triggered_rows, **table_kwargs)
    target = write_csv(table, path, config_digest)
    logger.info(f"异常分数已导出到 {target}，共 {len(table)} 条")
    return table


def read_score_dump(path: Union[str, Path]) -> pd.DataFrame:
    return read_csv(path)[0]
