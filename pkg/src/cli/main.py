"""
命令行入口

    python -m src.cli.main <subcommand> [--config FILE] [--set section.key=value ...] [--seed N] [--out DIR] [--force]

子命令: train / attack-eval / defend-eval / sweep / score-dump / grad-check
退出码: 0 成功；2 配置错误；3 数据错误；1 其他运行错误
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd

from src.attacks.plan import save_triggers
from src.config.experiment_config import ExperimentConfig, dump_ini, load_config
from src.config.settings import Config
from src.experiment.artifacts import ensure_writable, write_csv
from src.experiment.pipeline import build_attacker, build_data, build_session, run_experiment, triggered_test_embeddings
from src.experiment.score_dump import dump_scores
from src.experiment.sweep import SweepGrid, parse_values, result_columns, sweep, summarize
from src.nn.grad_check import random_grad_checks
from src.utils.errors import ConfigurationError, VflLabError, exit_code_for
from src.utils.logger import logger
from src.vfl.checkpoint import save_session
from src.vfl.protocol import collect_embeddings, train_vfl
from src.vflip.checkpoint import save_mae

GRAD_CHECK_TOLERANCE = 1e-4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vfl-lab", description="纵向联邦学习后门攻击与 VFLIP 防御实验平台")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add_common(sub: argparse.ArgumentParser):
        sub.add_argument("--config", default=None, help="INI 配置文件路径")
        sub.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE", help="覆盖配置项，可重复")
        sub.add_argument("--seed", type=int, default=None, help="只运行该种子（默认使用 eval.seeds）")
        sub.add_argument("--out", default=None, help="输出目录（默认 eval.out_dir 或 $VFL_LAB_OUT）")
        sub.add_argument("--force", action="store_true", help="覆盖摘要不一致的已有产物")

    for name, help_text in (
        ("train", "训练 VFL 模型并保存检查点"),
        ("attack-eval", "无防御评估 ACC / ASR"),
        ("defend-eval", "按 defense.mode 评估 ACC / ASR"),
        ("score-dump", "导出干净/触发样本的异常分数"),
    ):
        add_common(subparsers.add_parser(name, help=help_text))

    sweep_parser = subparsers.add_parser("sweep", help="沿一个轴做消融扫描")
    add_common(sweep_parser)
    sweep_parser.add_argument("--axis", required=True, help="poisoning_budget / gamma / rho / eta / noise_std")
    sweep_parser.add_argument("--values", required=True, help="逗号分隔的取值，如 1,2,3")

    grad_parser = subparsers.add_parser("grad-check", help="随机小网络上的有限差分梯度校验")
    grad_parser.add_argument("--networks", type=int, default=20)
    grad_parser.add_argument("--seed", type=int, default=0)
    return parser


def _seeds(config: ExperimentConfig, args) -> List[int]:
    return [args.seed] if args.seed is not None else list(config.eval.seeds)


def _out_dir(config: ExperimentConfig, args) -> Path:
    return Path(args.out or config.eval.out_dir or Config.OUTPUT_DIR)


def cmd_train(config: ExperimentConfig, args) -> str:
    digest = config.digest()
    out = _out_dir(config, args)
    paths = []
    for seed in _seeds(config, args):
        run_dir = out / f"session_seed{seed}"
        ensure_writable(run_dir, digest, args.force)
        data = build_data(config, seed)
        session = build_session(config, data, seed)
        plan = config.attack_plan()
        attacker = build_attacker(plan, config, data, seed) if plan is not None else None
        history, _ = train_vfl(session, data.train, config.vfl.epochs, [attacker] if attacker else [])
        save_session(session, run_dir, config_digest=digest)
        if attacker is not None and attacker.triggers:
            save_triggers(attacker.triggers, run_dir / "triggers.txt", config_digest=digest)
        (run_dir / "config.ini").write_text(dump_ini(config, config_digest=digest), encoding="utf-8")
        logger.info(f"seed={seed} 训练完成，最终训练准确率 {history[-1].train_acc:.4f}")
        paths.append(str(run_dir))
    return f"checkpoints: {', '.join(paths)} digest={digest}"


def _evaluate(config: ExperimentConfig, args, defense_mode: Optional[str], name: str) -> str:
    digest = config.digest()
    out = _out_dir(config, args)
    path = out / f"{name}.csv"
    ensure_writable(path, digest, args.force)

    rows = []
    for seed in _seeds(config, args):
        result = run_experiment(config, seed, defense_mode=defense_mode)
        row = {"axis": name, "value": float("nan")}
        row.update(result.report.to_row(config.vfl.n_participants))
        row["status"] = "ok"
        rows.append(row)
        if result.mae is not None:
            mae_path = out / f"mae_seed{seed}.txt"
            ensure_writable(mae_path, digest, args.force)
            save_mae(result.mae, mae_path, result.thresholds, config_digest=digest)

    table = pd.DataFrame(rows, columns=result_columns(config.vfl.n_participants))
    write_csv(table, path, digest)
    return f"acc={table['acc'].mean():.4f} asr={table['asr'].mean():.4f} seeds={len(rows)} -> {path}"


def cmd_attack_eval(config: ExperimentConfig, args) -> str:
    return _evaluate(config, args, "none", "attack_eval")


def cmd_defend_eval(config: ExperimentConfig, args) -> str:
    return _evaluate(config, args, None, "defend_eval")


def cmd_sweep(config: ExperimentConfig, args) -> str:
    grid = SweepGrid(axis=args.axis, values=parse_values(args.values), seeds=tuple(_seeds(config, args)))
    path = _out_dir(config, args) / f"sweep_{grid.axis}.csv"
    table = sweep(config, grid, path, workers=config.eval.workers, force=args.force)
    for _, row in summarize(table).iterrows():
        logger.info(f"{grid.axis}={row['value']}: acc={row['acc']:.4f} asr={row['asr']:.4f}")
    return f"{len(table)} runs -> {path}"


def cmd_score_dump(config: ExperimentConfig, args) -> str:
    if config.attack_plan() is None:
        raise ConfigurationError("score-dump 需要 attack.kind 为 badvfl 或 villain")
    digest = config.digest()
    out = _out_dir(config, args)
    paths = []
    for seed in _seeds(config, args):
        path = out / f"scores_seed{seed}.csv"
        ensure_writable(path, digest, args.force)
        result = run_experiment(config, seed, defense_mode="vflip")
        test = result.data.test
        triggered_ids = test.row_ids[test.labels != result.attacker.plan.target_label]
        dump_scores(
            result.mae,
            result.thresholds,
            collect_embeddings(result.session, test).concatenated,
            triggered_test_embeddings(result),
            path,
            config_digest=digest,
            clean_labels=test.labels,
            triggered_labels=test.labels[test.labels != result.attacker.plan.target_label],
            clean_ids=test.row_ids,
            triggered_ids=triggered_ids,
            space=config.defense.score_space,
        )
        paths.append(str(path))
    return f"score dumps: {', '.join(paths)}"


def cmd_grad_check(args) -> int:
    worst = random_grad_checks(n_networks=args.networks, seed=args.seed)
    passed = worst < GRAD_CHECK_TOLERANCE
    print(f"grad-check max_relative_error={worst:.3e} {'ok' if passed else 'FAILED'}")
    return 0 if passed else 1


COMMANDS = {
    "train": cmd_train,
    "attack-eval": cmd_attack_eval,
    "defend-eval": cmd_defend_eval,
    "sweep": cmd_sweep,
    "score-dump": cmd_score_dump,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """解析参数并执行子命令，返回进程退出码"""
    args = build_parser().parse_args(argv)
    try:
        Config.validate()
        if args.command == "grad-check":
            return cmd_grad_check(args)
        config = load_config(args.config, args.overrides)
        print(COMMANDS[args.command](config, args))
        return 0
    except VflLabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)
    except Exception as e:
        logger.exception(f"运行失败: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
