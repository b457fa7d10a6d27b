# 项目配置文件
import os

from dotenv import load_dotenv

load_dotenv()


def _env_flag(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


class Config:
    # 输出目录（CLI 产物默认位置）
    OUTPUT_DIR = os.getenv("VFL_LAB_OUT", "outputs")

    # 扫描实验并行度
    SWEEP_WORKERS = int(os.getenv("VFL_LAB_WORKERS", 2))

    # 是否显示tqdm进度条
    SHOW_PROGRESS = _env_flag("VFL_LAB_PROGRESS", "1")

    # 日志配置
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    LOG_DIR = os.getenv("LOG_DIR", "logs")
    LOG_TO_FILE = _env_flag("VFL_LAB_LOG_TO_FILE", "1")

    @classmethod
    def validate(cls):
        """验证配置是否完整"""
        from src.utils.errors import ConfigurationError

        if cls.SWEEP_WORKERS < 1:
            raise ConfigurationError(f"VFL_LAB_WORKERS 必须 >= 1，当前为 {cls.SWEEP_WORKERS}")
        if cls.LOG_LEVEL.upper() not in ("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"):
            raise ConfigurationError(f"LOG_LEVEL 取值不合法: {cls.LOG_LEVEL}")
