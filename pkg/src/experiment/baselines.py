# BDT 基线防御：在拼接嵌入上加独立同分布的高斯噪声
import numpy as np

from src.utils.errors import ConfigurationError


def bdt_noise(h_rows: np.ndarray, noise_std: float, rng: np.random.Generator) -> np.ndarray:
    if noise_std < 0:
        raise ConfigurationError(f"noise_std 必须 >= 0，当前为 {noise_std}")
    h_rows = np.asarray(h_rows, dtype=np.float64)
    if noise_std == 0:
        return h_rows.copy()
    return h_rows + rng.normal(0.0, noise_std, size=h_rows.shape)


class BdtDefense:
    """推理阶段回调形式的 BDT"""

    def __init__(self, noise_std: float, rng: np.random.Generator):
        if noise_std < 0:
            raise ConfigurationError(f"noise_std 必须 >= 0，当前为 {noise_std}")
        self.noise_std = noise_std
        self.rng = rng

    def __call__(self, h_rows: np.ndarray) -> np.ndarray:
        return bdt_noise(h_rows, self.noise_std, self.rng)
