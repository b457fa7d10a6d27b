"""
拆分式纵向联邦学习协议：每个批次执行五个训练步骤

  (1) 服务器选取批次下标 idx 并下发
  (2) 各参与方计算 hᵢ = Bᵢ(xᵢ^idx) 并上传（恶意方可经钩子修改数据或嵌入）
  (3) 服务器拼接嵌入并执行顶部模型前向
  (4) 服务器计算损失、更新顶部模型，回传各参与方的嵌入梯度
  (5) 各参与方以 lr × lr_scale 反向传播更新底部模型

推理阶段只执行步骤 (1)-(3)，可在 (3) 之前插入防御回调。
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from src.config.settings import Config
from src.data.dataset import SplitData
from src.nn.losses import softmax_cross_entropy
from src.nn.mlp import ForwardCache, mlp_backward, mlp_backward_sgd, mlp_forward
from src.utils.errors import ConfigurationError, ShapeError
from src.utils.log_utils import log_epoch_stats, log_operation
from src.utils.logger import logger
from src.vfl.hooks import INFER, TRAIN, Defense, VflHook, hooks_for
from src.vfl.session import EmbeddingBatch, EmbeddingStore, GradientBatch, VflSession

INFERENCE_BATCH = 1024


@dataclass
class EpochStats:
    epoch: int
    mean_loss: float
    train_acc: float


def _check_split(session: VflSession, split: SplitData):
    if len(split.blocks) != session.n_participants:
        raise ShapeError(f"数据划分有 {len(split.blocks)} 个特征块，会话有 {session.n_participants} 个参与方")
    for i, (block, model) in enumerate(zip(split.blocks, session.bottom_models)):
        if block.shape[1] != model.input_dim:
            raise ShapeError(f"参与方 {i} 的特征列数 {block.shape[1]} 与底部模型输入维度 {model.input_dim} 不一致")


def participant_forward(
    session: VflSession,
    participant: int,
    x_block: np.ndarray,
    idx: np.ndarray,
    epoch: int,
    phase: str,
    hooks: Sequence[VflHook] = (),
) -> Tuple[ForwardCache, np.ndarray]:
    """步骤 (2)：单个参与方的本地前向，钩子可先改数据、后改嵌入"""
    owners = hooks_for(hooks, participant)
    for hook in owners:
        modified = hook.on_local_batch(participant, x_block, idx, epoch, phase)
        if modified.shape != x_block.shape:
            raise ShapeError(f"钩子返回的本地数据形状 {modified.shape} 与 {x_block.shape} 不一致")
        x_block = modified

    cache, h_block = mlp_forward(session.bottom_models[participant], x_block)
    for hook in owners:
        modified = hook.on_embedding(participant, h_block, idx, epoch, phase)
        if modified.shape != h_block.shape:
            raise ShapeError(f"参与方 {participant} 的钩子返回嵌入形状 {modified.shape}，应为 {h_block.shape}")
        h_block = modified
    return cache, h_block


def server_step(
    session: VflSession,
    embeddings: EmbeddingBatch,
    labels: np.ndarray,
    update: bool = True,
) -> Tuple[float, np.ndarray, GradientBatch]:
    """
    步骤 (3)-(4)：顶部模型前向、计算损失、（可选）更新顶部模型并拆分嵌入梯度

    Returns:
        (loss, logits, 各参与方的嵌入梯度)
    """
    concatenated = embeddings.concatenated
    cache, logits = mlp_forward(session.top_model, concatenated)
    loss, logits_grad = softmax_cross_entropy(logits, labels)
    if update:
        input_grad = mlp_backward_sgd(session.top_model, cache, logits_grad, session.sgd)
    else:
        _, input_grad = mlp_backward(session.top_model, cache, logits_grad)
    blocks = [input_grad[:, session.block_slice(i)] for i in range(session.n_participants)]
    return loss, logits, GradientBatch(blocks=blocks)


@log_operation("VFL训练")
def train_vfl(
    session: VflSession,
    train: SplitData,
    epochs: int,
    hooks: Sequence[VflHook] = (),
) -> Tuple[List[EpochStats], EmbeddingStore]:
    """
    训练 VFL 模型并在最后一轮收集 ℋ^train

    Args:
        session: 会话（原地更新）
        train: 训练划分
        epochs: 训练轮数（从 1 开始编号）
        hooks: 恶意参与方钩子

    Returns:
        (每轮统计, 最后一轮的嵌入存储)
    """
    if epochs < 1:
        raise ConfigurationError(f"epochs 必须 >= 1，当前为 {epochs}")
    _check_split(session, train)

    n_rows = train.n_rows
    batch_size = session.sgd.batch_size
    session.labels = train.labels
    store = np.zeros((n_rows, session.concat_dim), dtype=np.float64)
    collected = np.zeros(n_rows, dtype=bool)
    for hook in hooks:
        hook.on_train_start(session, n_rows, epochs)

    stats: List[EpochStats] = []
    progress = tqdm(range(1, epochs + 1), desc="VFL训练", disable=not Config.SHOW_PROGRESS, leave=False)
    for epoch in progress:
        for hook in hooks:
            hook.on_epoch_start(session, epoch, epochs)

        order = session.rng.permutation(n_rows)
        losses, correct = [], 0
        for start in range(0, n_rows, batch_size):
            idx = order[start:start + batch_size]

            caches, blocks = [], []
            for i in range(session.n_participants):
                cache, h_block = participant_forward(session, i, train.blocks[i][idx], idx, epoch, TRAIN, hooks)
                caches.append(cache)
                blocks.append(h_block)
            embeddings = EmbeddingBatch(blocks=blocks, idx=idx)

            if epoch == epochs:
                store[idx] = embeddings.concatenated
                collected[idx] = True

            loss, logits, gradients = server_step(session, embeddings, train.labels[idx], update=True)
            losses.append(loss * idx.shape[0])
            correct += int(np.sum(np.argmax(logits, axis=1) == train.labels[idx]))

            for i in range(session.n_participants):
                grad_block = gradients.blocks[i]
                for hook in hooks_for(hooks, i):
                    grad_block = hook.on_gradient(i, grad_block, idx, epoch)
                mlp_backward_sgd(session.bottom_models[i], caches[i], grad_block, session.participant_sgd(i))

        for hook in hooks:
            hook.on_epoch_end(session, epoch, epochs)
        session.epochs_trained += 1

        epoch_stats = EpochStats(epoch=epoch, mean_loss=float(sum(losses) / n_rows), train_acc=correct / n_rows)
        stats.append(epoch_stats)
        log_epoch_stats("VFL训练", epoch, epochs, epoch_stats.mean_loss, f"训练准确率: {epoch_stats.train_acc:.4f}")

    if not collected.all():
        raise ShapeError("ℋ^train 未覆盖全部训练样本")
    logger.info(f"VFL训练完成，最终损失 {stats[-1].mean_loss:.4f}，ℋ^train 共 {n_rows} 行")
    return stats, EmbeddingStore(
        embeddings=store,
        labels=train.labels.copy(),
        n_participants=session.n_participants,
        embedding_dim=session.embedding_dim,
    )


def collect_embeddings(
    session: VflSession,
    split: SplitData,
    attacker_hooks_active: bool = False,
    hooks: Sequence[VflHook] = (),
    epoch: int = 0,
) -> EmbeddingBatch:
    """
    对整个划分做只前向的嵌入计算

    Args:
        attacker_hooks_active: 为 False 时忽略全部钩子（干净嵌入）
        hooks: 推理阶段的恶意方钩子
    """
    _check_split(session, split)
    active = tuple(hooks) if attacker_hooks_active else ()
    idx_all = np.arange(split.n_rows)
    parts: List[List[np.ndarray]] = [[] for _ in range(session.n_participants)]
    for start in range(0, split.n_rows, INFERENCE_BATCH):
        idx = idx_all[start:start + INFERENCE_BATCH]
        for i in range(session.n_participants):
            _, h_block = participant_forward(session, i, split.blocks[i][idx], idx, epoch, INFER, active)
            parts[i].append(h_block)
    blocks = [np.concatenate(chunks, axis=0) if chunks else np.zeros((0, session.embedding_dim)) for chunks in parts]
    return EmbeddingBatch(blocks=blocks, idx=idx_all)


def top_logits(session: VflSession, concatenated: np.ndarray) -> np.ndarray:
    return mlp_forward(session.top_model, concatenated)[1]


def apply_defense(session: VflSession, concatenated: np.ndarray, defense: Optional[Defense]) -> np.ndarray:
    if defense is None:
        return concatenated
    defended = defense(concatenated)
    if defended.shape != concatenated.shape:
        raise ShapeError(f"防御返回形状 {defended.shape}，应为 {concatenated.shape}")
    return defended


def infer(
    session: VflSession,
    split: SplitData,
    defense: Optional[Defense] = None,
    hooks: Sequence[VflHook] = (),
    attack_active: bool = False,
) -> np.ndarray:
    """推理：计算嵌入（可触发攻击）→ 可选防御 → 顶部模型 argmax"""
    embeddings = collect_embeddings(session, split, attacker_hooks_active=attack_active, hooks=hooks)
    concatenated = apply_defense(session, embeddings.concatenated, defense)
    return np.argmax(top_logits(session, concatenated), axis=1)
