"""
评估指标：ACC、ASR、逐参与方标记率、识别精确率/召回率
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.data.dataset import SplitData
from src.utils.errors import DataError
from src.vfl.hooks import Defense, VflHook
from src.vfl.protocol import infer
from src.vfl.session import VflSession


def accuracy(predictions: np.ndarray, labels: np.ndarray) -> float:
    if len(labels) == 0:
        raise DataError("评估数据为空，无法计算 ACC")
    return float(np.mean(np.asarray(predictions) == np.asarray(labels)))


def attack_success_rate(predictions: np.ndarray, labels: np.ndarray, target_label: int) -> float:
    """只在真实标签不是目标标签的行上统计被预测为目标标签的比例"""
    keep = np.asarray(labels) != target_label
    if not keep.any():
        raise DataError(f"测试集中没有非目标标签 (≠{target_label}) 的样本，无法计算 ASR")
    return float(np.mean(np.asarray(predictions)[keep] == target_label))


def eval_acc(session: VflSession, test: SplitData, defense: Optional[Defense] = None) -> float:
    """干净测试集上的准确率（攻击不触发）"""
    if test.n_rows == 0:
        raise DataError("测试集为空，无法计算 ACC")
    return accuracy(infer(session, test, defense=defense), test.labels)


def non_target_rows(test: SplitData, target_label: int) -> SplitData:
    positions = np.flatnonzero(test.labels != target_label)
    if positions.size == 0:
        raise DataError(f"测试集中没有非目标标签 (≠{target_label}) 的样本，无法计算 ASR")
    return test.subset(positions)


def eval_asr(
    session: VflSession,
    test: SplitData,
    hooks: Sequence[VflHook],
    target_label: int,
    defense: Optional[Defense] = None,
) -> float:
    """推理阶段触发攻击，统计非目标标签样本被预测为目标标签的比例"""
    triggered = non_target_rows(test, target_label)
    predictions = infer(session, triggered, defense=defense, hooks=hooks, attack_active=True)
    return attack_success_rate(predictions, triggered.labels, target_label)


def flag_rates(flagged: np.ndarray) -> List[float]:
    """(K, N) 标记矩阵 → 每个参与方被标记的比例"""
    if flagged.shape[0] == 0:
        return [float("nan")] * flagged.shape[1]
    return [float(v) for v in flagged.mean(axis=0)]


def identification_precision_recall(
    flagged_clean: np.ndarray,
    flagged_triggered: np.ndarray,
    attackers: Sequence[int],
) -> Tuple[float, float]:
    """
    以 (行, 参与方) 为单位：触发行上的攻击者块为正例，其余全部为负例
    无预测正例或无真实正例时对应指标为 nan
    """
    truth_triggered = np.zeros(flagged_triggered.shape, dtype=bool)
    truth_triggered[:, list(attackers)] = True
    true_positive = int(np.sum(flagged_triggered & truth_triggered))
    predicted = int(flagged_clean.sum() + flagged_triggered.sum())
    actual = int(truth_triggered.sum())
    precision = true_positive / predicted if predicted else float("nan")
    recall = true_positive / actual if actual else float("nan")
    return precision, recall


@dataclass
class EvalReport:
    acc: float
    asr: float
    seed: int
    config_digest: str
    flag_rate_clean: List[float] = field(default_factory=list)
    flag_rate_trig: List[float] = field(default_factory=list)
    ident_precision: float = float("nan")
    ident_recall: float = float("nan")
    label_inference_accuracy: float = float("nan")
    runtime_s: float = 0.0
    purify_fallbacks: int = 0

    def __post_init__(self):
        for name in ("acc", "asr"):
            value = getattr(self, name)
            if not math.isnan(value) and not 0.0 <= value <= 1.0:
                raise DataError(f"{name}={value} 不在 [0, 1] 内")

    def summary(self) -> str:
        """CLI 的一行摘要"""
        return f"acc={self.acc:.4f} asr={self.asr:.4f} seed={self.seed} digest={self.config_digest}"

    def to_row(self, n_participants: int) -> Dict[str, object]:
        """结果表的一行（不含 axis/value）"""
        row: Dict[str, object] = {"seed": self.seed, "acc": self.acc, "asr": self.asr}
        for prefix, rates in (("flag_rate_clean", self.flag_rate_clean), ("flag_rate_trig", self.flag_rate_trig)):
            for i in range(n_participants):
                row[f"{prefix}_{i}"] = rates[i] if i < len(rates) else float("nan")
        row.update({
            "ident_precision": self.ident_precision,
            "ident_recall": self.ident_recall,
            "runtime_s": self.runtime_s,
            "config_digest": self.config_digest,
            "label_inference_accuracy": self.label_inference_accuracy,
        })
        return row
