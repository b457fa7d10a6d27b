# 损失函数：softmax 交叉熵与掩码均方误差
from typing import Sequence, Tuple

import numpy as np

from src.nn.mlp import as_matrix, check_finite
from src.utils.errors import ConfigurationError, DataError, ShapeError


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exps = np.exp(shifted)
    return exps / exps.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits, labels: Sequence[int]) -> Tuple[float, np.ndarray]:
    """
    批平均的 softmax 交叉熵

    Returns:
        (loss, 对 logits 的梯度 (softmax - onehot) / batch_size)
    """
    z = as_matrix(logits, "logits")
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    n_rows, n_classes = z.shape
    if y.shape[0] != n_rows:
        raise ShapeError(f"标签数量 {y.shape[0]} 与 logits 行数 {n_rows} 不一致")
    bad = np.flatnonzero((y < 0) | (y >= n_classes))
    if bad.size:
        raise DataError(f"标签 {int(y[bad[0]])} 超出范围 [0, {n_classes})", row=int(bad[0]))

    shifted = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(n_rows)
    loss = float(np.mean(log_norm - shifted[rows, y]))

    grad = softmax(z)
    grad[rows, y] -= 1.0
    grad /= n_rows
    return loss, check_finite(grad, "交叉熵梯度")


def masked_mse(pred, target, mask) -> Tuple[float, np.ndarray]:
    """
    只在 mask==1 的列上计算的均方误差（对被掩码覆盖的元素取平均）

    Args:
        pred: 预测矩阵
        target: 目标矩阵（同形状）
        mask: 长度为列数的 0/1 向量
    """
    p = as_matrix(pred, "pred")
    t = as_matrix(target, "target")
    if p.shape != t.shape:
        raise ShapeError(f"pred 形状 {p.shape} 与 target 形状 {t.shape} 不一致")
    m = np.asarray(mask, dtype=np.float64).reshape(-1)
    if m.shape[0] != p.shape[1]:
        raise ShapeError(f"mask 长度 {m.shape[0]} 与列数 {p.shape[1]} 不一致")
    n_masked = p.shape[0] * m.sum()
    if n_masked == 0:
        raise ConfigurationError("mask 全为 0，目标函数无定义")

    diff = (p - t) * m
    loss = float(np.sum(diff * diff) / n_masked)
    grad = 2.0 * diff / n_masked
    return loss, check_finite(grad, "掩码MSE梯度")
