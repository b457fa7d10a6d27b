"""合成纵向分类数据：类原型跨越全部特征列，因此各参与方的特征块相互关联"""
import numpy as np

from src.data.dataset import Dataset, minmax_normalize
from src.utils.errors import ConfigurationError
from src.utils.logger import logger


def generate_synthetic(
    n_classes: int,
    dim: int,
    k_train: int,
    k_test: int,
    k_aux: int,
    separation: float = 2.0,
    noise_std: float = 1.0,
    seed: int = 0,
    normalize: bool = False,
) -> Dataset:
    """
    生成合成数据集：x = P[y] + ε，P[c] ~ N(0, separation²)，ε ~ N(0, noise_std²)

    Args:
        n_classes: 类别数
        dim: 特征维度
        k_train / k_test / k_aux: 各划分样本数（总样本数为三者之和）
        separation: 类原型标准差
        noise_std: 样本噪声标准差
        seed: 随机种子
        normalize: 是否做 min-max 归一化

    Returns:
        Dataset，各类样本数相差不超过 1
    """
    total = k_train + k_test + k_aux
    if min(k_train, k_test, k_aux) <= 0:
        raise ConfigurationError(f"样本数必须 > 0，当前为 train={k_train}, test={k_test}, aux={k_aux}")
    if n_classes < 2 or dim < 1:
        raise ConfigurationError(f"n_classes 必须 >= 2 且 dim >= 1，当前为 {n_classes}, {dim}")
    if separation <= 0 or noise_std <= 0:
        raise ConfigurationError(f"separation 与 noise_std 必须 > 0，当前为 {separation}, {noise_std}")

    rng = np.random.default_rng(seed)
    prototypes = rng.normal(0.0, separation, size=(n_classes, dim))
    labels = rng.permutation(np.arange(total) % n_classes).astype(np.int64)
    features = prototypes[labels] + rng.normal(0.0, noise_std, size=(total, dim))
    if normalize:
        features = minmax_normalize(features)

    logger.info(f"生成合成数据集: {total} 个样本，{dim} 维特征，{n_classes} 个类别")
    return Dataset(features=features, labels=labels, n_classes=n_classes)
