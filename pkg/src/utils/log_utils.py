# 日志记录和计时工具
import time
from functools import wraps
from typing import Any, Dict, Sequence

from src.utils.logger import logger


def log_operation(operation_name: str):
    """装饰器工厂：记录特定操作的日志"""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.perf_counter()

            logger.info(f"[{operation_name}] 开始执行 {func.__name__}")

            try:
                result = func(*args, **kwargs)

                duration = time.perf_counter() - start_time
                logger.info(f"[{operation_name}] {func.__name__} 执行成功，耗时: {duration:.2f}s")

                return result
            except Exception as e:
                duration = time.perf_counter() - start_time
                logger.error(f"[{operation_name}] {func.__name__} 执行失败，耗时: {duration:.2f}s")
                logger.error(f"[{operation_name}] 错误详情: {str(e)}")
                raise

        return wrapper
    return decorator


def log_epoch_stats(stage: str, epoch: int, total: int, loss: float, extra: str = ""):
    """记录单个训练轮次的统计"""
    suffix = f"，{extra}" if extra else ""
    logger.debug(f"[{stage}] 第 {epoch}/{total} 轮，平均损失: {loss:.6f}{suffix}")


def log_performance_stats(stats: Dict[str, Any]):
    """记录性能统计信息"""
    logger.info("=== 评估统计 ===")
    for key, value in stats.items():
        if isinstance(value, float):
            logger.info(f"{key}: {value:.4f}")
        elif isinstance(value, Sequence) and not isinstance(value, str):
            logger.info(f"{key}: {[round(float(v), 4) for v in value]}")
        else:
            logger.info(f"{key}: {value}")
    logger.info("===============")
