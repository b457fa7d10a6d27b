# 评估指标、BDT 基线、产物摘要、分数导出、单次实验与消融扫描
import math

import numpy as np
import pandas as pd
import pytest

from src.experiment.artifacts import ensure_writable, read_csv, read_digest, write_csv
from src.experiment.baselines import BdtDefense, bdt_noise
from src.experiment.metrics import (
    EvalReport,
    accuracy,
    attack_success_rate,
    flag_rates,
    identification_precision_recall,
)
from src.experiment.pipeline import build_data, check_disjoint, run_experiment
from src.experiment.score_dump import SCORE_COLUMNS, dump_scores, read_score_dump, score_table
from src.experiment.sweep import SweepGrid, parse_values, result_columns, summarize, sweep
from src.utils.errors import ArtifactError, ConfigurationError, DataError
from src.vflip.mae import train_mae
from src.vflip.scoring import fit_thresholds


# ---- 指标 ----

def test_accuracy_and_asr():
    labels = np.array([0, 1, 2, 1])
    predictions = np.array([0, 0, 2, 0])
    assert accuracy(predictions, labels) == pytest.approx(0.5)
    assert attack_success_rate(predictions, labels, target_label=0) == pytest.approx(2 / 3)


def test_asr_needs_non_target_rows():
    with pytest.raises(DataError):
        attack_success_rate(np.array([0, 0]), np.array([0, 0]), target_label=0)
    with pytest.raises(DataError):
        accuracy(np.array([]), np.array([]))


def test_flag_rates():
    flagged = np.array([[True, False, False], [True, True, False]])
    assert flag_rates(flagged) == [1.0, 0.5, 0.0]
    assert all(math.isnan(v) for v in flag_rates(np.zeros((0, 2), dtype=bool)))


def test_identification_precision_recall():
    clean = np.array([[True, False, False], [False, False, False]])
    triggered = np.array([[False, True, False], [False, True, True]])
    precision, recall = identification_precision_recall(clean, triggered, attackers=[1])
    assert precision == pytest.approx(0.5)
    assert recall == pytest.approx(1.0)

    nothing = np.zeros((2, 3), dtype=bool)
    precision, recall = identification_precision_recall(nothing, nothing, attackers=[1])
    assert math.isnan(precision)
    assert recall == 0.0


def test_eval_report_row():
    report = EvalReport(acc=0.9, asr=float("nan"), seed=2, config_digest="d", flag_rate_clean=[0.1, 0.2])
    row = report.to_row(2)
    assert row["flag_rate_clean_1"] == 0.2
    assert math.isnan(row["flag_rate_trig_0"])
    assert set(row) | {"axis", "value", "status"} == set(result_columns(2))
    assert "acc=0.9000" in report.summary()
    with pytest.raises(DataError):
        EvalReport(acc=1.5, asr=0.0, seed=0, config_digest="d")


# ---- BDT ----

def test_bdt_noise():
    h = np.ones((3, 4))
    assert np.array_equal(bdt_noise(h, 0.0, np.random.default_rng(0)), h)
    noisy = bdt_noise(h, 0.5, np.random.default_rng(0))
    assert not np.array_equal(noisy, h)
    assert np.array_equal(noisy, BdtDefense(0.5, np.random.default_rng(0))(h))
    with pytest.raises(ConfigurationError):
        BdtDefense(-1.0, np.random.default_rng(0))


# ---- 产物 ----

def test_csv_carries_digest(tmp_path):
    frame = pd.DataFrame({"a": [0.1, 1 / 3], "b": ["x", "y"]})
    path = write_csv(frame, tmp_path / "out" / "t.csv", "abc123")
    restored, digest = read_csv(path)
    assert digest == "abc123"
    assert restored["a"].tolist() == frame["a"].tolist()
    assert path.read_text(encoding="utf-8").startswith("# config_digest=abc123\n")


def test_ensure_writable(tmp_path):
    path = tmp_path / "t.csv"
    ensure_writable(path, "abc")
    write_csv(pd.DataFrame({"a": [1]}), path, "abc")
    ensure_writable(path, "abc")
    with pytest.raises(ArtifactError):
        ensure_writable(path, "def")
    ensure_writable(path, "def", force=True)


def test_read_digest_from_checkpoint_directory(tmp_path):
    (tmp_path / "manifest.txt").write_text("n_participants=4\nconfig_digest=feed\n", encoding="utf-8")
    assert read_digest(tmp_path) == "feed"
    assert read_digest(tmp_path / "missing.csv") is None


# ---- 分数导出 ----

@pytest.fixture
def fitted_mae(rng):
    h_train = rng.normal(size=(120, 6))
    mae = train_mae(h_train, 3, epochs=2, batch_size=40, seed=0, hidden_dim=8, latent_dim=4)
    return mae, fit_thresholds(mae, h_train, rho=2.0), rng.normal(size=(5, 6))


def test_score_table_layout(fitted_mae):
    mae, thresholds, rows = fitted_mae
    table = score_table(mae, thresholds, rows[:3], rows[3:] + 4.0, clean_labels=np.array([0, 1, 2]))
    assert list(table.columns) == SCORE_COLUMNS
    assert len(table) == 5 * 3 * 2
    assert (table["source_j"] != table["target_i"]).all()
    assert table["triggered_flag"].tolist() == [0] * 18 + [1] * 12
    assert np.allclose(table["threshold_i"], thresholds.thresholds[table["target_i"].to_numpy()])
    assert table.loc[table["triggered_flag"] == 1, "true_label"].eq(-1).all()


def test_score_dump_roundtrip(tmp_path, fitted_mae):
    mae, thresholds, rows = fitted_mae
    table = dump_scores(mae, thresholds, rows, rows[:0], tmp_path / "scores.csv", config_digest="d0")
    restored = read_score_dump(tmp_path / "scores.csv")
    assert len(restored) == 5 * 6
    assert np.array_equal(restored["score"].to_numpy(), table["score"].to_numpy())
    assert read_digest(tmp_path / "scores.csv") == "d0"


# ---- 单次实验 ----

def test_build_data_splits_are_disjoint(fast_config):
    data = build_data(fast_config(), seed=0)
    check_disjoint(data)
    assert (data.train.n_rows, data.test.n_rows, data.aux.n_rows) == (360, 120, 60)


def test_run_experiment_is_deterministic(fast_config):
    config = fast_config()
    a = run_experiment(config, seed=0).report
    b = run_experiment(config, seed=0).report
    assert (a.acc, a.asr) == (b.acc, b.asr)
    assert a.flag_rate_clean == b.flag_rate_clean
    assert a.config_digest == config.digest()
    assert 0.0 <= a.acc <= 1.0 and 0.0 <= a.asr <= 1.0
    assert len(a.flag_rate_trig) == 4


def test_run_without_attack_has_nan_asr(fast_config):
    result = run_experiment(fast_config("attack.kind=none"), seed=0)
    assert math.isnan(result.report.asr)
    assert result.attacker is None
    assert all(math.isnan(v) for v in result.report.flag_rate_trig)


def test_zero_noise_bdt_matches_no_defense(fast_config):
    undefended = run_experiment(fast_config(), seed=1, defense_mode="none").report
    bdt = run_experiment(fast_config("defense.mode=bdt", "defense.noise_std=0"), seed=1).report
    assert (bdt.acc, bdt.asr) == (undefended.acc, undefended.asr)


def test_defense_mode_does_not_change_training(fast_config):
    config = fast_config()
    undefended = run_experiment(config, seed=0, defense_mode="none")
    defended = run_experiment(config, seed=0)
    assert np.array_equal(undefended.store.embeddings, defended.store.embeddings)
    assert defended.mae is not None and undefended.mae is None


def test_run_with_label_inference_reports_accuracy(fast_config):
    report = run_experiment(fast_config("attack.label_knowledge=false", "attack.e_bkd=2"), seed=0).report
    assert not math.isnan(report.label_inference_accuracy)


# ---- 扫描 ----

def test_sweep_grid_validation():
    with pytest.raises(ConfigurationError):
        SweepGrid(axis="depth", values=(1.0,))
    with pytest.raises(ConfigurationError):
        SweepGrid(axis="gamma", values=(5.0,))
    with pytest.raises(ConfigurationError):
        SweepGrid(axis="rho", values=(1.0,), seeds=())
    assert SweepGrid(axis="rho", values=(1.0, 2.0), seeds=(0, 1)).runs() == [(1.0, 0), (1.0, 1), (2.0, 0), (2.0, 1)]


def test_parse_values():
    assert parse_values("1, 2.5,3") == (1.0, 2.5, 3.0)
    with pytest.raises(ConfigurationError):
        parse_values("1,a")


def test_empty_sweep_writes_header_only(tmp_path, fast_config):
    config = fast_config()
    table = sweep(config, SweepGrid(axis="rho", values=(), seeds=(0,)), tmp_path / "sweep.csv")
    assert table.empty
    restored, digest = read_csv(tmp_path / "sweep.csv")
    assert list(restored.columns) == result_columns(4)
    assert digest == config.digest()


def test_sweep_keeps_grid_order(tmp_path, fast_config):
    config = fast_config()
    grid = SweepGrid(axis="rho", values=(3.0, 1.0), seeds=(0,))
    table = sweep(config, grid, tmp_path / "sweep.csv", workers=2)
    assert table["value"].tolist() == [3.0, 1.0]
    assert (table["status"] == "ok").all()
    assert table["config_digest"].nunique() == 2
    assert summarize(table)["value"].tolist() == [3.0, 1.0]
    with pytest.raises(ArtifactError):
        sweep(fast_config("defense.rho=5"), grid, tmp_path / "sweep.csv")
