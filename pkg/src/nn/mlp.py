"""
全连接网络核心：层定义、初始化、前向传播与反向传播+SGD更新
所有数值均为 float64，矩阵以二维 numpy 数组承载（行优先）
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.utils.errors import ConfigurationError, NumericalError, ShapeError

RELU = "relu"
IDENTITY = "identity"
ACTIVATIONS = (RELU, IDENTITY)


@dataclass
class SgdConfig:
    """SGD 超参数"""
    learning_rate: float
    batch_size: int = 128

    def __post_init__(self):
        # 学习率为 0 仅用于冻结模型（梯度路由校验），配置层要求 > 0
        if not self.learning_rate >= 0:
            raise ConfigurationError(f"learning_rate 必须 >= 0，当前为 {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size 必须 >= 1，当前为 {self.batch_size}")

    def scaled(self, factor: float) -> "SgdConfig":
        """返回学习率乘以 factor 的新配置（参与方学习率放大）"""
        return SgdConfig(learning_rate=self.learning_rate * factor, batch_size=self.batch_size)


@dataclass
class DenseLayer:
    """单个全连接层，weight 形状为 (in_dim, out_dim)"""
    weight: np.ndarray
    bias: np.ndarray
    activation: str = IDENTITY

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]


@dataclass
class Mlp:
    """多层感知机：隐藏层使用给定激活，最后一层恒为 Identity"""
    layers: List[DenseLayer]
    seed: Optional[int] = None

    def __post_init__(self):
        if not self.layers:
            raise ConfigurationError("Mlp 至少需要一层")
        for k in range(len(self.layers) - 1):
            if self.layers[k].out_dim != self.layers[k + 1].in_dim:
                raise ConfigurationError(
                    f"第 {k} 层输出维度 {self.layers[k].out_dim} 与第 {k + 1} 层输入维度 "
                    f"{self.layers[k + 1].in_dim} 不一致"
                )
        for layer in self.layers:
            if layer.activation not in ACTIVATIONS:
                raise ConfigurationError(f"不支持的激活函数: {layer.activation}")
        if self.layers[-1].activation != IDENTITY:
            raise ConfigurationError("最后一层激活必须为 identity")

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def dims(self) -> List[int]:
        return [self.input_dim] + [layer.out_dim for layer in self.layers]

    def parameters(self) -> List[np.ndarray]:
        """按层顺序返回 [W0, b0, W1, b1, ...]（原地引用）"""
        params = []
        for layer in self.layers:
            params.extend([layer.weight, layer.bias])
        return params

    def copy(self) -> "Mlp":
        return Mlp(
            layers=[DenseLayer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers],
            seed=self.seed,
        )


@dataclass
class ForwardCache:
    """前向传播缓存：每层的输入与预激活值"""
    inputs: List[np.ndarray] = field(default_factory=list)
    pre_activations: List[np.ndarray] = field(default_factory=list)


def check_finite(values: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise NumericalError(f"{what} 中出现 NaN/Inf")
    return values


def as_matrix(values, what: str = "输入") -> np.ndarray:
    """转换为 float64 二维矩阵"""
    matrix = np.asarray(values, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix.reshape(1, -1)
    if matrix.ndim != 2:
        raise ShapeError(f"{what} 必须是二维矩阵，当前形状为 {matrix.shape}")
    return matrix


def mlp_init(layer_dims: Sequence[int], activation: str = RELU, seed: int = 0) -> Mlp:
    """
    初始化多层感知机

    Args:
        layer_dims: 各层维度，如 [in, hidden, ..., out]
        activation: 隐藏层激活函数
        seed: 随机种子（相同种子得到逐位一致的参数）

    Returns:
        初始化好的 Mlp，权重 ~ N(0, gain/fan_in)，偏置为 0
    """
    dims = list(layer_dims)
    if len(dims) < 2:
        raise ConfigurationError(f"layer_dims 至少需要 2 个元素，当前为 {dims}")
    if any(int(d) < 1 for d in dims):
        raise ConfigurationError(f"layer_dims 中所有维度必须 >= 1，当前为 {dims}")
    if activation not in ACTIVATIONS:
        raise ConfigurationError(f"不支持的激活函数: {activation}")

    rng = np.random.default_rng(seed)
    gain = 2.0 if activation == RELU else 1.0
    layers = []
    n_layers = len(dims) - 1
    for k in range(n_layers):
        fan_in, fan_out = int(dims[k]), int(dims[k + 1])
        weight = rng.normal(0.0, 1.0, size=(fan_in, fan_out)) * np.sqrt(gain / fan_in)
        bias = np.zeros(fan_out, dtype=np.float64)
        layer_activation = activation if k < n_layers - 1 else IDENTITY
        layers.append(DenseLayer(weight=weight, bias=bias, activation=layer_activation))
    return Mlp(layers=layers, seed=seed)


def mlp_forward(model: Mlp, batch) -> Tuple[ForwardCache, np.ndarray]:
    """前向传播，返回 (缓存, 输出)"""
    x = as_matrix(batch, "batch")
    if x.shape[1] != model.input_dim:
        raise ShapeError(f"输入列数 {x.shape[1]} 与模型输入维度 {model.input_dim} 不一致")

    cache = ForwardCache()
    for layer in model.layers:
        cache.inputs.append(x)
        z = x @ layer.weight + layer.bias
        cache.pre_activations.append(z)
        x = np.maximum(z, 0.0) if layer.activation == RELU else z
    return cache, check_finite(x, "前向输出")


def mlp_backward(model: Mlp, cache: ForwardCache, output_grad) -> Tuple[List[Tuple[np.ndarray, np.ndarray]], np.ndarray]:
    """
    反向传播（不更新参数）

    Returns:
        (每层的 (dW, db) 列表, 对输入的梯度)
    """
    grad = as_matrix(output_grad, "output_grad")
    expected = cache.pre_activations[-1].shape if cache.pre_activations else None
    if expected is None or grad.shape != expected:
        raise ShapeError(f"output_grad 形状 {grad.shape} 与前向输出形状 {expected} 不一致")

    param_grads: List[Tuple[np.ndarray, np.ndarray]] = [None] * len(model.layers)
    for k in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[k]
        if layer.activation == RELU:
            grad = grad * (cache.pre_activations[k] > 0.0)
        d_weight = cache.inputs[k].T @ grad
        d_bias = grad.sum(axis=0)
        param_grads[k] = (d_weight, d_bias)
        grad = grad @ layer.weight.T
    return param_grads, check_finite(grad, "输入梯度")


def apply_sgd(model: Mlp, param_grads: List[Tuple[np.ndarray, np.ndarray]], learning_rate: float):
    """按给定梯度原地执行一步 SGD"""
    if learning_rate == 0.0:
        return
    for layer, (d_weight, d_bias) in zip(model.layers, param_grads):
        layer.weight -= learning_rate * d_weight
        layer.bias -= learning_rate * d_bias


def mlp_backward_sgd(model: Mlp, cache: ForwardCache, output_grad, cfg: SgdConfig) -> np.ndarray:
    """反向传播并原地执行一步 SGD，返回对输入的梯度（基于更新前的参数）"""
    param_grads, input_grad = mlp_backward(model, cache, output_grad)
    apply_sgd(model, param_grads, cfg.learning_rate)
    return input_grad


def mlp_predict(model: Mlp, batch) -> np.ndarray:
    """只取前向输出"""
    return mlp_forward(model, batch)[1]
