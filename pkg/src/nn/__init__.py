"""全连接网络训练核心"""
from .mlp import (
    IDENTITY,
    RELU,
    DenseLayer,
    ForwardCache,
    Mlp,
    SgdConfig,
    apply_sgd,
    mlp_backward,
    mlp_backward_sgd,
    mlp_forward,
    mlp_init,
    mlp_predict,
)
from .losses import masked_mse, softmax, softmax_cross_entropy
from .grad_check import grad_check, random_grad_checks

__all__ = [
    "IDENTITY", "RELU", "DenseLayer", "ForwardCache", "Mlp", "SgdConfig", "apply_sgd",
    "mlp_backward", "mlp_backward_sgd", "mlp_forward", "mlp_init", "mlp_predict",
    "masked_mse", "softmax", "softmax_cross_entropy", "grad_check", "random_grad_checks",
]
