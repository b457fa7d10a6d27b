"""
产物文件的配置摘要：CSV 首行为 "# config_digest=<hex>"，key=value 文件含 config_digest 键
覆盖已有文件前比较摘要，不一致时拒绝（除非 force）
"""
from pathlib import Path
from typing import Optional, Tuple, Union

import pandas as pd

from src.utils.errors import ArtifactError
from src.utils.logger import logger

DIGEST_KEY = "config_digest"
DIGEST_PREFIX = f"# {DIGEST_KEY}="


def read_digest(path: Union[str, Path]) -> Optional[str]:
    """从 CSV 注释行或 key=value 行中读取摘要"""
    source = Path(path)
    if source.is_dir():
        source = source / "manifest.txt"
    if not source.exists():
        return None
    with source.open(encoding="utf-8") as handle:
        for line in handle:
            stripped = line.strip().lstrip("#").strip()
            if stripped.startswith(f"{DIGEST_KEY}="):
                return stripped.split("=", 1)[1].strip()
    return None


def ensure_writable(path: Union[str, Path], digest: str, force: bool = False):
    """已有产物摘要不一致时抛出 ArtifactError"""
    target = Path(path)
    if not target.exists():
        return
    existing = read_digest(target)
    if existing == digest:
        return
    if force:
        logger.warning(f"强制覆盖 {target}（原摘要 {existing}，新摘要 {digest}）")
        return
    raise ArtifactError(f"{target} 已存在且配置摘要不一致 ({existing} ≠ {digest})，使用 --force 覆盖")


def write_csv(frame: pd.DataFrame, path: Union[str, Path], digest: str) -> Path:
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", encoding="utf-8", newline="") as handle:
            handle.write(f"{DIGEST_PREFIX}{digest}\n")
            frame.to_csv(handle, index=False)
    except OSError as e:
        raise ArtifactError(f"无法写入 {target}: {e}") from e
    return target


def read_csv(path: Union[str, Path]) -> Tuple[pd.DataFrame, Optional[str]]:
    source = Path(path)
    if not source.exists():
        raise ArtifactError(f"文件不存在: {source}")
    return pd.read_csv(source, comment="#", float_precision="round_trip"), read_digest(source)
