"""
单次实验：数据 → 纵向划分 → VFL 训练（含攻击）→ 防御 → 评估
"""
import time
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.attacks.attacker import AttackerHook
from src.attacks.plan import AttackPlan
from src.config.experiment_config import ExperimentConfig
from src.data.csv_loader import load_csv
from src.data.dataset import PartitionedDataset
from src.data.partition import partition_vertical
from src.data.synthetic import generate_synthetic
from src.experiment.baselines import BdtDefense
from src.experiment.metrics import (
    EvalReport,
    eval_acc,
    eval_asr,
    flag_rates,
    identification_precision_recall,
    non_target_rows,
)
from src.nn.mlp import SgdConfig
from src.utils.errors import DataError
from src.utils.log_utils import log_operation, log_performance_stats
from src.utils.logger import logger
from src.utils.rng import derive_rng, derive_seed
from src.vfl.hooks import Defense, VflHook
from src.vfl.protocol import EpochStats, collect_embeddings, train_vfl
from src.vfl.session import EmbeddingStore, VflSession, create_session
from src.vflip.mae import Mae, train_mae
from src.vflip.purification import VflipDefense
from src.vflip.scoring import ThresholdTable, fit_thresholds


@dataclass
class ExperimentResult:
    report: EvalReport
    data: PartitionedDataset
    session: VflSession
    store: EmbeddingStore
    history: List[EpochStats]
    attacker: Optional[AttackerHook] = None
    defense: Optional[Defense] = None
    mae: Optional[Mae] = None
    thresholds: Optional[ThresholdTable] = None

    @property
    def hooks(self) -> List[VflHook]:
        return [self.attacker] if self.attacker is not None else []


def build_data(config: ExperimentConfig, seed: int) -> PartitionedDataset:
    data = config.data
    if data.source == "csv":
        dataset = load_csv(data.csv_path, data.label_column, data.n_classes)
        fractions = data.split_fractions
    else:
        dataset = generate_synthetic(
            n_classes=data.n_classes,
            dim=data.dim,
            k_train=data.k_train,
            k_test=data.k_test,
            k_aux=data.k_aux,
            separation=data.separation,
            noise_std=data.noise_std,
            seed=derive_seed(seed, "data"),
            normalize=data.normalize,
        )
        total = data.k_train + data.k_test + data.k_aux
        fractions = [data.k_train / total, data.k_test / total, data.k_aux / total]
    partitioned = partition_vertical(dataset, config.vfl.n_participants, fractions, seed=derive_seed(seed, "partition"))
    check_disjoint(partitioned)
    return partitioned


def check_disjoint(data: PartitionedDataset):
    """评估只使用测试划分：测试行不能出现在训练或辅助划分中"""
    test_ids = set(data.test.row_ids.tolist())
    leaked = test_ids & (set(data.train.row_ids.tolist()) | set(data.aux.row_ids.tolist()))
    if leaked:
        raise DataError(f"测试划分与训练/辅助划分有 {len(leaked)} 行重叠")


def build_session(config: ExperimentConfig, data: PartitionedDataset, seed: int) -> VflSession:
    vfl = config.vfl
    return create_session(
        block_widths=[data.spec.block_width(i) for i in range(vfl.n_participants)],
        embedding_dim=vfl.embedding_dim,
        n_classes=data.n_classes,
        sgd=SgdConfig(learning_rate=vfl.learning_rate, batch_size=vfl.batch_size),
        seed=derive_seed(seed, "session"),
        bottom_layers=vfl.bottom_layers,
        bottom_hidden=vfl.bottom_hidden,
        top_layers=vfl.top_layers,
        top_hidden=vfl.top_hidden,
    )


def build_attacker(plan: AttackPlan, config: ExperimentConfig, data: PartitionedDataset, seed: int) -> AttackerHook:
    return AttackerHook(
        plan=plan,
        train_blocks={p: data.train.blocks[p] for p in plan.attacker_indices},
        aux=data.aux,
        train_labels=data.train.labels if plan.label_knowledge else None,
        batch_size=config.vfl.batch_size,
        seed=derive_seed(seed, "attack"),
    )


def build_vflip(config: ExperimentConfig, store: EmbeddingStore, seed: int):
    defense = config.defense
    mae = train_mae(
        store.embeddings,
        n_participants=store.n_participants,
        epochs=defense.mae_epochs,
        lr_n1=defense.mae_lr_n1,
        lr_11=defense.mae_lr_11,
        dropout_prob=defense.dropout_prob,
        batch_size=defense.mae_batch_size,
        seed=derive_seed(seed, "mae"),
        strategy=defense.mae_strategy,
        hidden_dim=defense.mae_hidden,
        latent_dim=defense.mae_latent,
    )
    thresholds = fit_thresholds(mae, store.embeddings, defense.rho, defense.score_space)
    return mae, thresholds, VflipDefense(mae, thresholds, defense.purify_mode, defense.score_space)


@log_operation("实验运行")
def run_experiment(config: ExperimentConfig, seed: int, defense_mode: Optional[str] = None) -> ExperimentResult:
    """
    完整的训练 → 攻击 → 防御 → 评估流程

    Args:
        config: 已校验的实验配置
        seed: 本次运行的种子（各阶段随机数流均由其派生）
        defense_mode: 覆盖 config.defense.mode（attack-eval 使用 "none"）

    Returns:
        ExperimentResult，report 中 asr 在无攻击时为 nan
    """
    started = time.perf_counter()
    mode = defense_mode or config.defense.mode
    digest = config.digest()
    logger.info(f"开始实验: digest={digest}, seed={seed}, 攻击={config.attack.kind}, 防御={mode}")

    data = build_data(config, seed)
    session = build_session(config, data, seed)
    plan = config.attack_plan()
    attacker = build_attacker(plan, config, data, seed) if plan is not None else None
    hooks = [attacker] if attacker is not None else []

    history, store = train_vfl(session, data.train, config.vfl.epochs, hooks)

    mae, thresholds, defense = None, None, None
    if mode == "vflip":
        mae, thresholds, defense = build_vflip(config, store, seed)
    elif mode == "bdt":
        defense = BdtDefense(config.defense.noise_std, derive_rng(seed, "bdt"))

    acc = eval_acc(session, data.test, defense)
    asr = float("nan")
    if plan is not None:
        asr = eval_asr(session, data.test, hooks, plan.target_label, defense)

    report = EvalReport(acc=acc, asr=asr, seed=seed, config_digest=digest)
    if isinstance(defense, VflipDefense):
        _identification_stats(report, defense, session, data, plan, hooks)
    if attacker is not None and not plan.label_knowledge:
        report.label_inference_accuracy = attacker.inferred.accuracy(data.train.labels, plan.target_label)
    report.runtime_s = time.perf_counter() - started

    log_performance_stats({
        "ACC": report.acc,
        "ASR": report.asr,
        "干净样本标记率": report.flag_rate_clean,
        "触发样本标记率": report.flag_rate_trig,
        "耗时(s)": report.runtime_s,
    })
    return ExperimentResult(
        report=report,
        data=data,
        session=session,
        store=store,
        history=history,
        attacker=attacker,
        defense=defense,
        mae=mae,
        thresholds=thresholds,
    )


def _identification_stats(
    report: EvalReport,
    defense: VflipDefense,
    session: VflSession,
    data: PartitionedDataset,
    plan: Optional[AttackPlan],
    hooks: List[VflHook],
):
    """干净测试行与触发后的非目标测试行上的标记率、识别精确率/召回率"""
    clean = collect_embeddings(session, data.test).concatenated
    clean_inspection = defense.inspect(clean)
    flagged_clean = clean_inspection.flagged
    report.flag_rate_clean = flag_rates(flagged_clean)
    report.purify_fallbacks = clean_inspection.n_fallback
    if plan is None:
        report.flag_rate_trig = [float("nan")] * session.n_participants
        return

    triggered_split = non_target_rows(data.test, plan.target_label)
    triggered = collect_embeddings(session, triggered_split, attacker_hooks_active=True, hooks=hooks).concatenated
    triggered_inspection = defense.inspect(triggered)
    flagged_triggered = triggered_inspection.flagged
    report.purify_fallbacks += triggered_inspection.n_fallback
    report.flag_rate_trig = flag_rates(flagged_triggered)
    report.ident_precision, report.ident_recall = identification_precision_recall(
        flagged_clean, flagged_triggered, plan.attacker_indices
    )


def triggered_test_embeddings(result: ExperimentResult) -> np.ndarray:
    """触发后的非目标测试行的拼接嵌入（score-dump 使用）"""
    plan = result.attacker.plan
    split = non_target_rows(result.data.test, plan.target_label)
    return collect_embeddings(result.session, split, attacker_hooks_active=True, hooks=result.hooks).concatenated
