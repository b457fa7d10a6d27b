"""
恶意参与方钩子：把攻击计划接入 VFL 训练/推理流程

一个钩子控制计划中的全部攻击者：它们共享推断标签和中毒样本集合，各自持有触发器。
主攻击者（下标最小者）在 E_bkd 之前的轮次执行交换式标签推断。
"""
from typing import Dict, Optional, Set, Union

import numpy as np

from src.attacks.adaptive import adaptive_schedule
from src.attacks.badvfl import badvfl_poison, build_feature_trigger, stamp_trigger
from src.attacks.label_inference import SwapLabelInference
from src.attacks.plan import BADVFL, VILLAIN, AttackPlan, FeatureTriggerSpec, InferredLabels, TriggerSpec
from src.attacks.villain import villain_build_trigger, villain_inject
from src.data.dataset import SplitData
from src.nn.mlp import mlp_predict
from src.utils.errors import ConfigurationError
from src.utils.logger import logger
from src.utils.rng import derive_rng
from src.vfl.hooks import INFER, VflHook

EMPTY = np.zeros(0, dtype=np.int64)


class AttackerHook(VflHook):
    """执行 BadVFL / VILLAIN（可选自适应）的恶意参与方"""

    def __init__(
        self,
        plan: AttackPlan,
        train_blocks: Dict[int, np.ndarray],
        aux: Optional[SplitData] = None,
        train_labels: Optional[np.ndarray] = None,
        batch_size: int = 128,
        seed: int = 0,
    ):
        """
        Args:
            plan: 攻击计划
            train_blocks: 攻击者各自的训练特征块 {参与方下标: 特征}
            aux: 辅助划分（仅攻击者可见，用于标签推断）
            train_labels: 训练标签，仅在 plan.label_knowledge 为 True 时提供
            batch_size: 训练批次大小（决定每批候选数）
            seed: 实验种子
        """
        missing = [p for p in plan.attacker_indices if p not in train_blocks]
        if missing:
            raise ConfigurationError(f"缺少攻击者 {missing} 的训练特征块")
        if plan.label_knowledge and train_labels is None:
            raise ConfigurationError("label_knowledge=True 时必须提供训练标签")
        if not plan.label_knowledge:
            if aux is None or not np.any(aux.labels == plan.target_label):
                raise ConfigurationError("标签推断需要辅助划分中至少一个目标标签样本")

        self.plan = plan
        self.participants = tuple(plan.attacker_indices)
        self.train_blocks = train_blocks
        self.aux = aux
        self.train_labels = train_labels
        self.batch_size = batch_size

        self._rng_poison = derive_rng(seed, "attack.poison")
        self._rng_augment = derive_rng(seed, "attack.villain_augment")
        self._rng_adaptive = derive_rng(seed, "attack.adaptive")
        self._rng_inference = derive_rng(seed, "attack.label_inference")

        self.session = None
        self.total_epochs = 0
        self.inferred: Optional[InferredLabels] = None
        self.inference: Optional[SwapLabelInference] = None
        self.poisoned = np.zeros(0, dtype=bool)
        self.triggers: Dict[int, Union[TriggerSpec, FeatureTriggerSpec]] = {}
        self._clean: Dict[int, np.ndarray] = {}
        self._clean_seen: Dict[int, np.ndarray] = {}
        self._non_target = EMPTY

        # 当前批次（由主攻击者计算，其他攻击者复用）
        self._budget_rows = EMPTY
        self._adaptive_rows = EMPTY
        self._donor_positions = EMPTY

        # 训练期注入审计（训练样本下标）
        self.triggered_rows: Set[int] = set()
        self.adaptive_rows: Set[int] = set()
        self.injections_per_epoch: Dict[int, int] = {}
        self._missing_trigger_warned = False

    # ---- 生命周期 ----

    def on_train_start(self, session, n_train: int, epochs: int):
        self.session = session
        self.total_epochs = epochs
        self.poisoned = np.zeros(n_train, dtype=bool)
        self.triggered_rows.clear()
        self.adaptive_rows.clear()
        self.injections_per_epoch.clear()
        self.triggers = {}
        if self.plan.kind == VILLAIN:
            self._clean = {p: np.zeros((n_train, session.embedding_dim)) for p in self.participants}
            self._clean_seen = {p: np.zeros(n_train, dtype=bool) for p in self.participants}

        if self.plan.label_knowledge:
            self.inferred = InferredLabels.from_ground_truth(self.train_labels, self.plan.target_label)
            self.inference = None
        else:
            self.inferred = InferredLabels.unknown(n_train)
            if self.plan.e_bkd == 0:
                logger.warning("E_bkd=0 且不知道标签：没有推断窗口，攻击不会投毒任何样本")
            self.inference = SwapLabelInference(
                n_train=n_train,
                aux_target_embeddings=self._aux_target_embeddings(),
                budget=self.plan.poisoning_budget,
                batch_size=self.batch_size,
                rng=self._rng_inference,
            )
        logger.info(
            f"攻击者 {list(self.participants)} 就绪: 类型={self.plan.kind}, 目标标签={self.plan.target_label}, "
            f"预算={self.plan.poisoning_budget}, E_bkd={self.plan.e_bkd}, 已知标签={self.plan.label_knowledge}"
        )

    def on_epoch_start(self, session, epoch: int, total_epochs: int):
        scale = self.plan.lr_amplify if epoch <= self.plan.e_bkd else 1.0
        for p in self.participants:
            session.lr_scale[p] = scale
        if self.inference is not None and epoch <= self.plan.e_bkd:
            self.inference.refresh_aux(self._aux_target_embeddings())
        if epoch == self.plan.e_bkd + 1:
            self._arm()

    def on_epoch_end(self, session, epoch: int, total_epochs: int):
        if self.plan.backdoor_active(epoch):
            logger.debug(f"[攻击] 第 {epoch} 轮注入触发器 {self.injections_per_epoch.get(epoch, 0)} 次")

    def _aux_target_embeddings(self) -> np.ndarray:
        lead = self.plan.lead
        features = self.aux.blocks[lead][self.aux.labels == self.plan.target_label]
        return mlp_predict(self.session.bottom_models[lead], features)

    def _arm(self):
        """首个注入轮：固定推断结果、抽取中毒样本并构造触发器"""
        if self.inference is not None:
            self.inferred = self.inference.inferred
            logger.info(f"标签推断结束，覆盖率 {self.inferred.coverage():.4f}，推断目标样本 {self.inferred.target_positions().size} 个")

        targets = self.inferred.target_positions()
        n_poison = int(round(self.plan.poisoning_budget * targets.size))
        if n_poison:
            chosen = self._rng_poison.choice(targets, size=n_poison, replace=False)
            self.poisoned[chosen] = True
        else:
            logger.warning("没有可投毒的推断目标样本")
        self._non_target = self.inferred.non_target_positions()

        for p in self.participants:
            if self.plan.kind == BADVFL:
                self.triggers[p] = build_feature_trigger(
                    self.train_blocks[p].shape[1], self.plan.trigger_width, self.plan.trigger_value
                )
            elif self._clean_seen[p].sum() >= 2:
                self.triggers[p] = self._build_villain(self._clean[p][self._clean_seen[p]])
        logger.info(f"后门注入开始: 中毒样本 {n_poison} 个, 触发器 {sorted(self.triggers)}")

    def _build_villain(self, clean: np.ndarray) -> TriggerSpec:
        return villain_build_trigger(
            clean,
            m_fraction=self.plan.m_fraction,
            gamma=self.plan.gamma,
            aug_drop_prob=self.plan.aug_drop_prob,
            aug_scale_range=self.plan.aug_scale_range,
        )

    def _select_rows(self, idx: np.ndarray, epoch: int):
        if not self.plan.backdoor_active(epoch):
            self._budget_rows, self._adaptive_rows, self._donor_positions = EMPTY, EMPTY, EMPTY
            return
        self._budget_rows = np.flatnonzero(self.poisoned[idx])
        self._adaptive_rows = adaptive_schedule(
            epoch, self.total_epochs, self.plan.adaptive_eta, self.inferred.flags[idx], self._rng_adaptive
        )
        if self.plan.kind == BADVFL and self._budget_rows.size and self._non_target.size:
            self._donor_positions = self._rng_poison.choice(self._non_target, size=self._budget_rows.size)
        else:
            self._donor_positions = EMPTY

        self.triggered_rows.update(int(r) for r in idx[self._budget_rows])
        self.adaptive_rows.update(int(r) for r in idx[self._adaptive_rows])
        count = int(self._budget_rows.size + self._adaptive_rows.size)
        self.injections_per_epoch[epoch] = self.injections_per_epoch.get(epoch, 0) + count

    # ---- 数据级（BadVFL）----

    def on_local_batch(self, participant: int, x_block: np.ndarray, idx: np.ndarray, epoch: int, phase: str) -> np.ndarray:
        if phase == INFER:
            trigger = self.triggers.get(participant)
            if self.plan.kind == BADVFL and trigger is not None:
                return stamp_trigger(x_block, np.arange(x_block.shape[0]), trigger)
            return x_block

        if participant == self.plan.lead:
            self._select_rows(idx, epoch)
        if self.plan.kind != BADVFL or not self.plan.backdoor_active(epoch):
            return x_block

        trigger = self.triggers[participant]
        donors = self.train_blocks[participant][self._donor_positions] if self._donor_positions.size else None
        poisoned = badvfl_poison(x_block, self._budget_rows, donors, trigger)
        return stamp_trigger(poisoned, self._adaptive_rows, trigger)

    # ---- 嵌入级（VILLAIN 与标签推断）----

    def on_embedding(self, participant: int, h_block: np.ndarray, idx: np.ndarray, epoch: int, phase: str) -> np.ndarray:
        if phase == INFER:
            if self.plan.kind != VILLAIN:
                return h_block
            trigger = self.triggers.get(participant)
            if trigger is None:
                if not self._missing_trigger_warned:
                    logger.warning(f"攻击者 {participant} 尚未构造触发器，推断阶段不注入")
                    self._missing_trigger_warned = True
                return h_block
            return villain_inject(h_block, np.arange(h_block.shape[0]), trigger, augment=False)

        if not self.plan.backdoor_active(epoch):
            if self.plan.kind == VILLAIN:
                self._clean[participant][idx] = h_block
                self._clean_seen[participant][idx] = True
            if participant == self.plan.lead and self.inference is not None:
                return self.inference.prepare_batch(idx, h_block)
            return h_block

        if self.plan.kind != VILLAIN:
            return h_block
        if participant not in self.triggers:
            # E_bkd=0 时没有预注入轮次，用首个批次的干净嵌入构造
            self.triggers[participant] = self._build_villain(h_block)
        rows = np.concatenate([self._budget_rows, self._adaptive_rows])
        return villain_inject(h_block, rows, self.triggers[participant], rng=self._rng_augment, augment=True)

    def on_gradient(self, participant: int, grad_block: np.ndarray, idx: np.ndarray, epoch: int) -> np.ndarray:
        if participant == self.plan.lead and self.inference is not None and epoch <= self.plan.e_bkd:
            return self.inference.observe(idx, grad_block)
        return grad_block

    # ---- 审计 ----

    def clean_label_violations(self) -> np.ndarray:
        """训练期被注入触发器、但既不是推断目标也不属于自适应集合的样本"""
        if self.inferred is None:
            return EMPTY
        target = set(int(r) for r in self.inferred.target_positions())
        return np.array(sorted(self.triggered_rows - target - self.adaptive_rows), dtype=np.int64)

    def audit(self) -> Dict[str, int]:
        return {
            "poisoned_set": int(self.poisoned.sum()),
            "triggered_rows": len(self.triggered_rows),
            "adaptive_rows": len(self.adaptive_rows),
            "violations": int(self.clean_label_violations().size),
        }
