# 表格数据加载器
import os
from typing import Union

import numpy as np
import pandas as pd

from src.data.dataset import Dataset, minmax_normalize
from src.utils.errors import DataError
from src.utils.logger import logger


class CsvDatasetLoader:
    """CSV 表格数据加载器：首行为表头，指定一列为标签，其余列为数值特征"""

    SUPPORTED_EXTENSIONS = {'.csv', '.txt'}

    @staticmethod
    def load_csv(path: Union[str, os.PathLike], label_column: str, n_classes: int) -> Dataset:
        """
        加载 CSV 数据集

        Args:
            path: 文件路径
            label_column: 标签列名
            n_classes: 期望的类别数

        Returns:
            特征按列 min-max 归一化、标签按首次出现顺序编号的 Dataset
        """
        ext = os.path.splitext(str(path))[1].lower()
        if ext not in CsvDatasetLoader.SUPPORTED_EXTENSIONS:
            raise DataError(f"不支持的文件格式: {ext}")
        if not os.path.exists(path):
            raise DataError(f"文件不存在: {path}")

        logger.info(f"正在加载表格数据: {path}")
        try:
            frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
        except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
            raise DataError(f"无法解析 CSV 文件 {path}: {str(e)}")

        if label_column not in frame.columns:
            raise DataError(f"缺少标签列 '{label_column}'", column=label_column)
        if frame.empty:
            raise DataError(f"文件 {path} 没有数据行")

        feature_columns = [c for c in frame.columns if c != label_column]
        if not feature_columns:
            raise DataError(f"文件 {path} 没有特征列")

        features = np.empty((len(frame), len(feature_columns)), dtype=np.float64)
        for j, column in enumerate(feature_columns):
            values = pd.to_numeric(frame[column].str.strip(), errors="coerce")
            bad = np.flatnonzero(values.isna().to_numpy())
            if bad.size:
                row = int(bad[0])
                # 行号按文件行计（表头为第 1 行）
                raise DataError(
                    f"特征单元格不是数值: '{frame[column].iloc[row]}'", row=row + 2, column=column
                )
            features[:, j] = values.to_numpy(dtype=np.float64)

        codes, uniques = pd.factorize(frame[label_column], sort=False)
        if len(uniques) != n_classes:
            raise DataError(
                f"标签取值个数 {len(uniques)} 与配置的类别数 {n_classes} 不一致", column=label_column
            )

        dataset = Dataset(
            features=minmax_normalize(features),
            labels=codes.astype(np.int64),
            n_classes=n_classes,
        )
        logger.info(f"成功加载 {dataset.n_samples} 行、{dataset.n_features} 个特征，标签映射: {list(uniques)}")
        return dataset


def load_csv(path: Union[str, os.PathLike], label_column: str, n_classes: int) -> Dataset:
    return CsvDatasetLoader.load_csv(path, label_column, n_classes)
