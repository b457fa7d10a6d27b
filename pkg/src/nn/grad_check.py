"""
有限差分梯度校验：用中心差分逐参数对比解析梯度
"""
from typing import Callable, List, Optional, Tuple

import numpy as np

from src.nn.losses import masked_mse, softmax_cross_entropy
from src.nn.mlp import Mlp, as_matrix, mlp_backward, mlp_forward, mlp_init
from src.utils.errors import ConfigurationError

CROSS_ENTROPY = "cross_entropy"
MASKED_MSE = "masked_mse"

# 分母下限：梯度很小时按绝对误差 / 1e-3 计
RELATIVE_FLOOR = 1e-3

GradTransform = Callable[[List[Tuple[np.ndarray, np.ndarray]]], List[Tuple[np.ndarray, np.ndarray]]]


def _loss_fn(loss: str, targets, mask):
    if loss == CROSS_ENTROPY:
        return lambda out: softmax_cross_entropy(out, targets)
    if loss == MASKED_MSE:
        target_matrix = as_matrix(targets, "targets")
        mask_vector = np.ones(target_matrix.shape[1]) if mask is None else mask
        return lambda out: masked_mse(out, target_matrix, mask_vector)
    raise ConfigurationError(f"不支持的损失: {loss}")


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    return np.abs(analytic - numeric) / np.maximum(np.abs(numeric), RELATIVE_FLOOR)


def grad_check(
    model: Mlp,
    batch,
    labels,
    eps: float = 1e-5,
    loss: str = CROSS_ENTROPY,
    mask=None,
    grad_transform: Optional[GradTransform] = None,
) -> float:
    """
    中心差分校验所有参数的梯度

    Args:
        model: 待校验网络（校验后参数恢复原值）
        batch: 输入批
        labels: 交叉熵时为类别下标；掩码MSE时为目标矩阵
        eps: 差分步长，取值 (0, 1e-2]
        loss: cross_entropy 或 masked_mse
        mask: 掩码MSE的列掩码，默认全 1
        grad_transform: 对解析梯度的变换（用于校验器自检）

    Returns:
        所有参数上的最大相对误差
    """
    if not (0.0 < eps <= 1e-2):
        raise ConfigurationError(f"eps 必须在 (0, 1e-2] 内，当前为 {eps}")
    x = as_matrix(batch, "batch")
    objective = _loss_fn(loss, labels, mask)

    cache, output = mlp_forward(model, x)
    _, output_grad = objective(output)
    analytic, _ = mlp_backward(model, cache, output_grad)
    if grad_transform is not None:
        analytic = grad_transform([(dw.copy(), db.copy()) for dw, db in analytic])

    def evaluate() -> float:
        return objective(mlp_forward(model, x)[1])[0]

    worst = 0.0
    for layer, (d_weight, d_bias) in zip(model.layers, analytic):
        for param, grad in ((layer.weight, d_weight), (layer.bias, d_bias)):
            numeric = np.zeros_like(param)
            for index in np.ndindex(param.shape):
                original = param[index]
                param[index] = original + eps
                plus = evaluate()
                param[index] = original - eps
                minus = evaluate()
                param[index] = original
                numeric[index] = (plus - minus) / (2.0 * eps)
            worst = max(worst, float(np.max(relative_error(grad, numeric))))
    return worst


def random_grad_checks(n_networks: int = 20, seed: int = 0, eps: float = 1e-5) -> float:
    """
    在随机小网络上对两种损失各做一次梯度校验

    Returns:
        全部网络、全部参数上的最大相对误差
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(n_networks):
        dims = [int(v) for v in rng.integers(2, 6, size=int(rng.integers(2, 5)))]
        model = mlp_init(dims, seed=int(rng.integers(0, 2**31 - 1)))
        batch = rng.normal(size=(4, dims[0]))
        labels = rng.integers(0, dims[-1], size=4)
        worst = max(worst, grad_check(model, batch, labels, eps=eps, loss=CROSS_ENTROPY))
        targets = rng.normal(size=(4, dims[-1]))
        mask = (rng.random(dims[-1]) < 0.5).astype(np.float64)
        mask[int(rng.integers(dims[-1]))] = 1.0
        worst = max(worst, grad_check(model, batch, targets, eps=eps, loss=MASKED_MSE, mask=mask))
    return worst
