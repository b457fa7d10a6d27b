# 统一异常定义
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional, Union


class VflLabError(Exception):
    """所有实验平台异常的基类"""

    exit_code = 1


class ConfigurationError(VflLabError, ValueError):
    """配置错误：维度、比例、网格或配置键不合法"""

    exit_code = 2


class DataError(VflLabError, ValueError):
    """数据错误：CSV单元格、标签范围、空数据集等"""

    exit_code = 3

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        location = []
        if row is not None:
            location.append(f"行 {row}")
        if column is not None:
            location.append(f"列 '{column}'")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


class ShapeError(VflLabError, ValueError):
    """形状不匹配"""


class NumericalError(VflLabError, ArithmeticError):
    """计算结果出现 NaN/Inf"""


class ArtifactError(VflLabError, OSError):
    """产物文件错误：摘要不一致、路径不可写或文件内容损坏"""


@contextmanager
def parsing_artifact(source: Union[str, Path]) -> Iterator[None]:
    """解析产物文件时把数值、缺键等解析失败统一转为 ArtifactError"""
    try:
        yield
    except ArtifactError:
        raise
    except (ValueError, KeyError, IndexError, StopIteration) as e:
        raise ArtifactError(f"产物文件损坏: {source} ({type(e).__name__}: {e})") from e


def exit_code_for(error: BaseException) -> int:
    """根据异常类别返回CLI退出码"""
    if isinstance(error, VflLabError):
        return error.exit_code
    return 1
