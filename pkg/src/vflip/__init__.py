"""VFLIP：基于掩码自编码器的推理阶段后门识别与净化"""
from .standardizer import Standardizer, fit_standardizer
from .masks import MaskVector, block_mask, drop_block, keep_block
from .mae import BOTH, N_MINUS_ONE, ONE_TO_ONE, Mae, mae_init, train_mae
from .scoring import RAW, STANDARDIZED, ThresholdTable, anomaly_scores, anomaly_scores_batch, fit_thresholds, thresholds_from_scores
from .identification import IdentificationResult, identify, identify_batch, vote_counts
from .purification import REPLACE_FLAGGED_ONLY, RECONSTRUCT_ALL, DefenseInspection, DefenseOutcome, VflipDefense, defend, purify, purify_batch
from .checkpoint import load_mae, save_mae

__all__ = [
    "Standardizer", "fit_standardizer", "MaskVector", "block_mask", "drop_block", "keep_block",
    "BOTH", "N_MINUS_ONE", "ONE_TO_ONE", "Mae", "mae_init", "train_mae",
    "RAW", "STANDARDIZED", "ThresholdTable", "anomaly_scores", "anomaly_scores_batch", "fit_thresholds",
    "thresholds_from_scores", "IdentificationResult", "identify", "identify_batch", "vote_counts",
    "REPLACE_FLAGGED_ONLY", "RECONSTRUCT_ALL", "DefenseInspection", "DefenseOutcome", "VflipDefense", "defend", "purify",
    "purify_batch", "load_mae", "save_mae",
]
