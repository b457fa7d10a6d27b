"""
消融扫描：对一个轴上的每个取值 × 每个种子独立运行完整实验，结果按网格顺序写成 CSV
"""
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd
from tqdm import tqdm

from src.config.experiment_config import ExperimentConfig
from src.config.settings import Config
from src.experiment.artifacts import ensure_writable, write_csv
from src.experiment.pipeline import run_experiment
from src.utils.errors import ConfigurationError
from src.utils.log_utils import log_operation
from src.utils.logger import logger

# 轴名 → (配置键, 合法区间 [low, high])
SWEEP_AXES: Dict[str, Tuple[str, float, float]] = {
    "poisoning_budget": ("attack.poisoning_budget", 1e-9, 1.0),
    "gamma": ("attack.gamma", 0.1, 4.5),
    "rho": ("defense.rho", 0.0, math.inf),
    "eta": ("attack.adaptive_eta", 0.0, 1.0),
    "noise_std": ("defense.noise_std", 0.0, math.inf),
}


@dataclass(frozen=True)
class SweepGrid:
    axis: str
    values: Tuple[float, ...] = ()
    seeds: Tuple[int, ...] = field(default_factory=lambda: (0, 1, 2))

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigurationError(f"不支持的扫描轴 '{self.axis}'（可选: {', '.join(SWEEP_AXES)}）")
        _, low, high = SWEEP_AXES[self.axis]
        bad = [v for v in self.values if not low <= v <= high]
        if bad:
            raise ConfigurationError(f"扫描轴 {self.axis} 的取值 {bad} 超出合法区间 [{low}, {high}]")
        if not self.seeds:
            raise ConfigurationError("扫描至少需要一个种子")

    @property
    def config_key(self) -> str:
        return SWEEP_AXES[self.axis][0]

    def runs(self) -> List[Tuple[float, int]]:
        """网格顺序：先取值后种子"""
        return [(value, seed) for value in self.values for seed in self.seeds]


def parse_values(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as e:
        raise ConfigurationError(f"--values 必须是逗号分隔的数字，当前为 '{text}'") from e


def result_columns(n_participants: int) -> List[str]:
    columns = ["axis", "value", "seed", "acc", "asr"]
    columns += [f"flag_rate_clean_{i}" for i in range(n_participants)]
    columns += [f"flag_rate_trig_{i}" for i in range(n_participants)]
    columns += ["ident_precision", "ident_recall", "runtime_s", "config_digest", "label_inference_accuracy", "status"]
    return columns


def _run_one(config: ExperimentConfig, axis: str, value: float, seed: int) -> Dict[str, object]:
    row: Dict[str, object] = {"axis": axis, "value": value, "seed": seed}
    try:
        report = run_experiment(config, seed).report
        row.update(report.to_row(config.vfl.n_participants))
        row["status"] = "ok"
    except Exception as e:
        logger.warning(f"扫描运行失败 ({axis}={value}, seed={seed}): {e}")
        row["config_digest"] = config.digest()
        # CSV 以 # 开头的内容视为注释
        row["status"] = " ".join(str(e).replace("#", "").split()) or type(e).__name__
    return row


@log_operation("消融扫描")
def sweep(
    base_config: ExperimentConfig,
    grid: SweepGrid,
    out_path: Optional[Union[str, Path]] = None,
    workers: Optional[int] = None,
    force: bool = False,
) -> pd.DataFrame:
    """
    Args:
        base_config: 基础配置
        grid: 扫描网格
        out_path: 结果 CSV 路径（None 时只返回表）
        workers: 线程池大小，默认 Config.SWEEP_WORKERS
        force: 摘要不一致时是否覆盖已有结果

    Returns:
        结果表，行按网格顺序排列；单次运行失败记录在 status 列，扫描继续
    """
    digest = base_config.digest()
    if out_path is not None:
        ensure_writable(out_path, digest, force)

    runs = grid.runs()
    configs = {value: base_config.with_values({grid.config_key: value}) for value in grid.values}
    rows: List[Optional[Dict[str, object]]] = [None] * len(runs)
    pool_size = max(1, min(workers or Config.SWEEP_WORKERS, len(runs) or 1))
    logger.info(f"开始扫描 {grid.axis}: {len(grid.values)} 个取值 × {len(grid.seeds)} 个种子，线程数 {pool_size}")

    with ThreadPoolExecutor(max_workers=pool_size) as executor:
        futures = {
            executor.submit(_run_one, configs[value], grid.axis, value, seed): position
            for position, (value, seed) in enumerate(runs)
        }
        progress = tqdm(as_completed(futures), total=len(futures), desc=f"扫描 {grid.axis}", disable=not Config.SHOW_PROGRESS)
        for future in progress:
            rows[futures[future]] = future.result()

    table = pd.DataFrame(rows, columns=result_columns(base_config.vfl.n_participants))
    failed = int((table["status"] != "ok").sum()) if len(table) else 0
    if failed:
        logger.warning(f"扫描中有 {failed} 次运行失败")
    if out_path is not None:
        write_csv(table, out_path, digest)
        logger.info(f"扫描结果已写入 {out_path}")
    return table


def summarize(table: pd.DataFrame, metrics: Sequence[str] = ("acc", "asr")) -> pd.DataFrame:
    """按取值汇总成功运行的多种子均值"""
    ok = table[table["status"] == "ok"]
    return ok.groupby("value", sort=False)[list(metrics)].mean().reset_index()
