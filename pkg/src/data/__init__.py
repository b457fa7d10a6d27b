"""数据生成、加载与纵向划分"""
from .dataset import Dataset, PartitionedDataset, PartitionSpec, SplitData, minmax_normalize
from .synthetic import generate_synthetic
from .csv_loader import CsvDatasetLoader, load_csv
from .partition import column_ranges, partition_vertical

__all__ = [
    "Dataset", "PartitionedDataset", "PartitionSpec", "SplitData", "minmax_normalize",
    "generate_synthetic", "CsvDatasetLoader", "load_csv", "column_ranges", "partition_vertical",
]
