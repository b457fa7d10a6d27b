# key=value 纯文本格式读写（会话清单、MAE 统计量、触发器参数共用）
from pathlib import Path
from typing import Dict, Iterable, Union

import numpy as np

from src.utils.errors import ArtifactError


def format_value(value) -> str:
    if isinstance(value, np.ndarray):
        return ",".join(f"{float(v):.17g}" for v in value.reshape(-1))
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def kv_lines(values: Dict[str, object]) -> Iterable[str]:
    for key, value in values.items():
        yield f"{key}={format_value(value)}"


def parse_kv(lines: Iterable[str]) -> Dict[str, str]:
    parsed: Dict[str, str] = {}
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ArtifactError(f"第 {number} 行不是 key=value 格式: {line}")
        key, value = line.split("=", 1)
        parsed[key.strip()] = value.strip()
    return parsed


def parse_vector(text: str) -> np.ndarray:
    if not text:
        return np.zeros(0, dtype=np.float64)
    try:
        return np.array([float(v) for v in text.split(",")], dtype=np.float64)
    except ValueError as e:
        raise ArtifactError(f"无法解析的数值列表: {text}") from e


def write_kv(path: Union[str, Path], values: Dict[str, object]):
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text("\n".join(kv_lines(values)) + "\n", encoding="utf-8")


def read_kv(path: Union[str, Path]) -> Dict[str, str]:
    source = Path(path)
    if not source.exists():
        raise ArtifactError(f"文件不存在: {source}")
    return parse_kv(source.read_text(encoding="utf-8").splitlines())
