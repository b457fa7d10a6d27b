"""
Mlp 文本检查点（版本化纯文本格式）

    mlp v1 <n_layers>
    layer <in> <out> <activation>
    <in 行权重，每行 out 个数>
    <1 行偏置>
    ...
数值以 17 位有效数字写出，读回逐位一致。
"""
from pathlib import Path
from typing import Iterator, List, Union

import numpy as np

from src.nn.mlp import ACTIVATIONS, DenseLayer, Mlp
from src.utils.errors import ArtifactError, parsing_artifact

FORMAT_HEADER = "mlp"
FORMAT_VERSION = "v1"


def _format_row(values: np.ndarray) -> str:
    return " ".join(f"{float(v):.17g}" for v in values)


def mlp_to_text(model: Mlp) -> str:
    lines = [f"{FORMAT_HEADER} {FORMAT_VERSION} {len(model.layers)}"]
    for layer in model.layers:
        lines.append(f"layer {layer.in_dim} {layer.out_dim} {layer.activation}")
        lines.extend(_format_row(row) for row in layer.weight)
        lines.append(_format_row(layer.bias))
    return "\n".join(lines) + "\n"


def mlp_from_lines(lines: Iterator[str], source: Union[str, Path] = "Mlp 检查点") -> Mlp:
    """从行迭代器解析一个 Mlp（供复合检查点复用）"""
    with parsing_artifact(source):
        return _parse_mlp(lines)


def _parse_mlp(lines: Iterator[str]) -> Mlp:
    def next_line() -> str:
        for raw in lines:
            stripped = raw.strip()
            if stripped:
                return stripped
        raise ArtifactError("Mlp 检查点意外结束")

    header = next_line().split()
    if len(header) != 3 or header[0] != FORMAT_HEADER or header[1] != FORMAT_VERSION:
        raise ArtifactError(f"无法识别的 Mlp 检查点头: {' '.join(header)}")
    n_layers = int(header[2])

    layers: List[DenseLayer] = []
    for _ in range(n_layers):
        spec = next_line().split()
        if len(spec) != 4 or spec[0] != "layer" or spec[3] not in ACTIVATIONS:
            raise ArtifactError(f"无法识别的层定义: {' '.join(spec)}")
        in_dim, out_dim = int(spec[1]), int(spec[2])
        weight = np.array([[float(v) for v in next_line().split()] for _ in range(in_dim)], dtype=np.float64)
        bias = np.array([float(v) for v in next_line().split()], dtype=np.float64)
        if weight.shape != (in_dim, out_dim) or bias.shape != (out_dim,):
            raise ArtifactError(f"层参数形状与声明 ({in_dim}, {out_dim}) 不一致")
        layers.append(DenseLayer(weight=weight, bias=bias, activation=spec[3]))
    return Mlp(layers=layers)


def mlp_from_text(text: str, source: Union[str, Path] = "Mlp 检查点") -> Mlp:
    return mlp_from_lines(iter(text.splitlines()), source)


def save_mlp(model: Mlp, path: Union[str, Path]):
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(mlp_to_text(model), encoding="utf-8")


def load_mlp(path: Union[str, Path]) -> Mlp:
    source = Path(path)
    if not source.exists():
        raise ArtifactError(f"检查点不存在: {source}")
    return mlp_from_text(source.read_text(encoding="utf-8"), source)
