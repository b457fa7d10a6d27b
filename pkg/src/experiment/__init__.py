"""评估指标、基线、分数导出与消融扫描"""
from .metrics import EvalReport, accuracy, attack_success_rate, eval_acc, eval_asr, flag_rates, identification_precision_recall
from .baselines import BdtDefense, bdt_noise
from .artifacts import ensure_writable, read_csv, read_digest, write_csv
from .score_dump import dump_scores, read_score_dump, score_table
from .pipeline import ExperimentResult, run_experiment
from .sweep import SweepGrid, sweep

__all__ = [
    "EvalReport", "accuracy", "attack_success_rate", "eval_acc", "eval_asr", "flag_rates",
    "identification_precision_recall", "BdtDefense", "bdt_noise", "ensure_writable", "read_csv",
    "read_digest", "write_csv", "dump_scores", "read_score_dump", "score_table",
    "ExperimentResult", "run_experiment", "SweepGrid", "sweep",
]
