"""
MAE 检查点：编码器、解码器两段 nn 文本格式，后接 [stats] 段保存标准化器与阈值表
"""
from pathlib import Path
from typing import Optional, Tuple, Union

from src.nn.checkpoint import mlp_from_lines, mlp_to_text
from src.utils.errors import ArtifactError, parsing_artifact
from src.utils.kv_format import kv_lines, parse_kv, parse_vector
from src.utils.logger import logger
from src.vflip.mae import Mae
from src.vflip.scoring import ThresholdTable
from src.vflip.standardizer import Standardizer

STATS_SECTION = "[stats]"


def save_mae(mae: Mae, path: Union[str, Path], thresholds: Optional[ThresholdTable] = None, config_digest: Optional[str] = None) -> Path:
    stats = {
        "n_participants": mae.n_participants,
        "embedding_dim": mae.embedding_dim,
        "dropout_prob": mae.dropout_prob,
        "mean": mae.standardizer.mean,
        "std": mae.standardizer.std,
    }
    if thresholds is not None:
        stats.update({"rho": thresholds.rho, "mu": thresholds.mu, "sigma": thresholds.sigma, "thresholds": thresholds.thresholds})
    if config_digest:
        stats["config_digest"] = config_digest

    text = mlp_to_text(mae.encoder) + mlp_to_text(mae.decoder) + STATS_SECTION + "\n" + "\n".join(kv_lines(stats)) + "\n"
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
    logger.info(f"MAE 检查点已保存到 {target}")
    return target


def load_mae(path: Union[str, Path]) -> Tuple[Mae, Optional[ThresholdTable]]:
    source = Path(path)
    if not source.exists():
        raise ArtifactError(f"检查点不存在: {source}")
    lines = source.read_text(encoding="utf-8").splitlines()
    if STATS_SECTION not in lines:
        raise ArtifactError(f"{source} 缺少 {STATS_SECTION} 段")
    split = lines.index(STATS_SECTION)
    models = iter(lines[:split])
    encoder, decoder = mlp_from_lines(models, source), mlp_from_lines(models, source)
    stats = parse_kv(lines[split + 1:])

    with parsing_artifact(source):
        mae = Mae(
            encoder=encoder,
            decoder=decoder,
            standardizer=Standardizer(mean=parse_vector(stats["mean"]), std=parse_vector(stats["std"])),
            n_participants=int(stats["n_participants"]),
            embedding_dim=int(stats["embedding_dim"]),
            dropout_prob=float(stats["dropout_prob"]),
        )
        thresholds = None
        if "rho" in stats:
            thresholds = ThresholdTable(mu=parse_vector(stats["mu"]), sigma=parse_vector(stats["sigma"]), rho=float(stats["rho"]))
    return mae, thresholds
