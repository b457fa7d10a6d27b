"""
训练/推理流程中的钩子接口

恶意参与方通过钩子读取或修改自己的本地数据、上传嵌入和收到的梯度；
服务器端防御以 Defense 回调的形式作用于拼接后的嵌入。
"""
from typing import Callable, Iterable, List, Sequence, Tuple

import numpy as np

TRAIN = "train"
INFER = "infer"

# 推理阶段防御：输入/输出均为拼接嵌入矩阵 (batch × N·d)
Defense = Callable[[np.ndarray], np.ndarray]


class VflHook:
    """钩子基类：默认不做任何修改"""

    # 钩子所控制的参与方下标
    participants: Tuple[int, ...] = ()

    def owns(self, participant: int) -> bool:
        return participant in self.participants

    def on_train_start(self, session, n_train: int, epochs: int):
        pass

    def on_epoch_start(self, session, epoch: int, total_epochs: int):
        pass

    def on_local_batch(self, participant: int, x_block: np.ndarray, idx: np.ndarray, epoch: int, phase: str) -> np.ndarray:
        return x_block

    def on_embedding(self, participant: int, h_block: np.ndarray, idx: np.ndarray, epoch: int, phase: str) -> np.ndarray:
        return h_block

    def on_gradient(self, participant: int, grad_block: np.ndarray, idx: np.ndarray, epoch: int) -> np.ndarray:
        """观察服务器回传的梯度，返回用于本地反向传播的梯度"""
        return grad_block

    def on_epoch_end(self, session, epoch: int, total_epochs: int):
        pass


def hooks_for(hooks: Iterable[VflHook], participant: int) -> List[VflHook]:
    return [hook for hook in hooks if hook.owns(participant)]


def identity_defense(concatenated: np.ndarray) -> np.ndarray:
    return concatenated
