"""
掩码自编码器（MAE）及其两种掩码策略的交替训练

  N−1→1：随机选块 i，输入去掉块 i，只在块 i 上计算重建损失，学习率 lr_n1
  1→1：  随机选两个不同的块 i、j，输入只保留块 j，只在块 i 上计算重建损失，学习率 lr_11

每个小批次先做一步 N−1→1 再做一步 1→1；训练时对输入按元素做 drop-out。
"""
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from tqdm import tqdm

from src.config.settings import Config
from src.nn.losses import masked_mse
from src.nn.mlp import Mlp, SgdConfig, mlp_backward_sgd, mlp_forward, mlp_init
from src.utils.errors import ConfigurationError, ShapeError
from src.utils.log_utils import log_epoch_stats, log_operation
from src.utils.logger import logger
from src.utils.rng import derive_rng, derive_seed
from src.vflip.masks import block_mask, drop_block, keep_block
from src.vflip.standardizer import Standardizer, fit_standardizer

BOTH = "both"
N_MINUS_ONE = "n_minus_one"
ONE_TO_ONE = "one_to_one"
MAE_STRATEGIES = (BOTH, N_MINUS_ONE, ONE_TO_ONE)


@dataclass
class Mae:
    encoder: Mlp
    decoder: Mlp
    standardizer: Standardizer
    n_participants: int
    embedding_dim: int
    dropout_prob: float = 0.1
    loss_history: List[float] = field(default_factory=list)

    def __post_init__(self):
        width = self.n_participants * self.embedding_dim
        if self.encoder.input_dim != width or self.decoder.output_dim != width:
            raise ShapeError(
                f"编码器输入 {self.encoder.input_dim} / 解码器输出 {self.decoder.output_dim} 必须都等于 N·d = {width}"
            )
        if self.encoder.output_dim != self.decoder.input_dim:
            raise ShapeError("编码器输出维度与解码器输入维度不一致")

    @property
    def width(self) -> int:
        return self.n_participants * self.embedding_dim

    def block(self, participant: int) -> slice:
        return slice(participant * self.embedding_dim, (participant + 1) * self.embedding_dim)

    def reconstruct(self, z: np.ndarray) -> np.ndarray:
        """标准化空间中的一次前向（不做 drop-out）"""
        latent = mlp_forward(self.encoder, z)[1]
        return mlp_forward(self.decoder, latent)[1]


def mae_dims(width: int, hidden_dim: int, latent_dim: int) -> Tuple[List[int], List[int]]:
    """编码器/解码器各 3 层全连接"""
    return [width, hidden_dim, hidden_dim, latent_dim], [latent_dim, hidden_dim, hidden_dim, width]


def mae_init(
    standardizer: Standardizer,
    n_participants: int,
    hidden_dim: int = 128,
    latent_dim: int = 64,
    dropout_prob: float = 0.1,
    seed: int = 0,
) -> Mae:
    if n_participants < 2:
        raise ConfigurationError(f"MAE 的掩码策略需要至少 2 个参与方，当前为 {n_participants}")
    if standardizer.dim % n_participants:
        raise ShapeError(f"嵌入宽度 {standardizer.dim} 不能被参与方数量 {n_participants} 整除")
    if not 0 <= dropout_prob < 1:
        raise ConfigurationError(f"dropout_prob 必须在 [0, 1) 内，当前为 {dropout_prob}")
    encoder_dims, decoder_dims = mae_dims(standardizer.dim, hidden_dim, latent_dim)
    return Mae(
        encoder=mlp_init(encoder_dims, seed=derive_seed(seed, "mae.encoder")),
        decoder=mlp_init(decoder_dims, seed=derive_seed(seed, "mae.decoder")),
        standardizer=standardizer,
        n_participants=n_participants,
        embedding_dim=standardizer.dim // n_participants,
        dropout_prob=dropout_prob,
    )


def mae_step(mae: Mae, inputs: np.ndarray, targets: np.ndarray, target_block: int, learning_rate: float) -> float:
    """一步掩码重建：损失只在 target_block 上计算，编码器与解码器同步更新"""
    sgd = SgdConfig(learning_rate=learning_rate, batch_size=inputs.shape[0])
    encoder_cache, latent = mlp_forward(mae.encoder, inputs)
    decoder_cache, output = mlp_forward(mae.decoder, latent)
    mask = block_mask([target_block], mae.n_participants, mae.embedding_dim)
    loss, output_grad = masked_mse(output, targets, mask)
    latent_grad = mlp_backward_sgd(mae.decoder, decoder_cache, output_grad, sgd)
    mlp_backward_sgd(mae.encoder, encoder_cache, latent_grad, sgd)
    return loss


def _dropout(x: np.ndarray, prob: float, rng: np.random.Generator) -> np.ndarray:
    if prob <= 0:
        return x
    return x * (rng.random(x.shape) >= prob)


@log_operation("MAE训练")
def train_mae(
    h_train: np.ndarray,
    n_participants: int,
    epochs: int = 20,
    lr_n1: float = 0.01,
    lr_11: float = 0.1,
    dropout_prob: float = 0.1,
    batch_size: int = 128,
    seed: int = 0,
    strategy: str = BOTH,
    hidden_dim: int = 128,
    latent_dim: int = 64,
) -> Mae:
    """
    在 ℋ^train 上训练 MAE

    Args:
        h_train: 原始空间的拼接嵌入 (K × N·d)，内部重新拟合标准化器
        n_participants: 参与方数量 N
        epochs: 训练轮数
        lr_n1 / lr_11: 两种策略各自的学习率
        dropout_prob: 输入按元素 drop-out 概率（仅训练时）
        strategy: both / n_minus_one / one_to_one

    Returns:
        训练好的 Mae，loss_history 为每轮平均损失
    """
    if epochs < 1:
        raise ConfigurationError(f"MAE epochs 必须 >= 1，当前为 {epochs}")
    if strategy not in MAE_STRATEGIES:
        raise ConfigurationError(f"不支持的 MAE 训练策略: {strategy}")
    if batch_size < 1:
        raise ConfigurationError(f"batch_size 必须 >= 1，当前为 {batch_size}")

    standardizer = fit_standardizer(h_train)
    mae = mae_init(standardizer, n_participants, hidden_dim, latent_dim, dropout_prob, seed)
    z_train = standardizer.transform(h_train)
    rng = derive_rng(seed, "mae.train")
    n_rows, d = z_train.shape[0], mae.embedding_dim
    use_n1 = strategy in (BOTH, N_MINUS_ONE)
    use_11 = strategy in (BOTH, ONE_TO_ONE)

    logger.info(f"开始训练 MAE: {n_rows} 行, N={n_participants}, d={d}, 策略={strategy}, 轮数={epochs}")
    progress = tqdm(range(1, epochs + 1), desc="MAE训练", disable=not Config.SHOW_PROGRESS, leave=False)
    for epoch in progress:
        order = rng.permutation(n_rows)
        losses = []
        for start in range(0, n_rows, batch_size):
            z = z_train[order[start:start + batch_size]]
            if use_n1:
                i = int(rng.integers(n_participants))
                inputs = _dropout(drop_block(z, i, d), dropout_prob, rng)
                losses.append(mae_step(mae, inputs, z, i, lr_n1))
            if use_11:
                i, j = (int(v) for v in rng.choice(n_participants, size=2, replace=False))
                inputs = _dropout(keep_block(z, j, d), dropout_prob, rng)
                losses.append(mae_step(mae, inputs, z, i, lr_11))
        mae.loss_history.append(float(np.mean(losses)))
        log_epoch_stats("MAE训练", epoch, epochs, mae.loss_history[-1])

    logger.info(f"MAE 训练完成: 首轮损失 {mae.loss_history[0]:.4f} → 末轮损失 {mae.loss_history[-1]:.4f}")
    return mae
