# 实验配置：INI 读取、覆盖项、跨节校验与配置摘要
from pathlib import Path

import pytest

from src.attacks.plan import BADVFL, VILLAIN
from src.config.experiment_config import (
    ExperimentConfig,
    dump_ini,
    load_config,
    parse_overrides,
    read_ini,
)
from src.utils.errors import ConfigurationError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def test_defaults():
    config = load_config()
    assert config.vfl.n_participants == 4
    assert config.defense.rho == 2.0
    assert config.eval.seeds == [0, 1, 2]
    plan = config.attack_plan()
    assert plan.kind == VILLAIN
    assert plan.attacker_indices == (1,)


@pytest.mark.parametrize("name", ["synthetic_benchmark.ini", "multi_attacker.ini"])
def test_bundled_configs_load(name):
    config = load_config(CONFIG_DIR / name)
    assert config.attack_plan() is not None


def test_multi_attacker_config():
    plan = load_config(CONFIG_DIR / "multi_attacker.ini").attack_plan()
    assert plan.attacker_indices == (2, 3, 4)
    assert plan.lead == 2


def test_overrides_are_typed():
    config = load_config(None, ["attack.kind=badvfl", "attack.gamma=1.5", "eval.seeds=4,5", "attack.label_knowledge=false"])
    assert config.attack_plan().kind == BADVFL
    assert config.attack.gamma == 1.5
    assert config.eval.seeds == [4, 5]
    assert config.attack.label_knowledge is False


def test_attack_none_has_no_plan():
    assert load_config(None, ["attack.kind=none"]).attack_plan() is None


@pytest.mark.parametrize("overrides", [
    ["vfl.n_participants=2"],
    ["attack.attacker_indices=0,1"],
    ["attack.e_bkd=30"],
    ["attack.poisoning_budget=0"],
    ["attack.kind=blend"],
    ["vfl.unknown_key=1"],
    ["data.source=csv"],
    ["vfl.n_participants=50"],
    ["attack.aug_scale_min=2.0"],
    ["attack.target_label=5"],
])
def test_invalid_configs_raise_configuration_error(overrides):
    with pytest.raises(ConfigurationError):
        load_config(None, overrides)


@pytest.mark.parametrize("item", ["noequals", "nosection=1", "metrics.acc=1"])
def test_malformed_overrides(item):
    with pytest.raises(ConfigurationError):
        parse_overrides([item])


def test_read_ini_rejects_missing_file_and_unknown_sections(tmp_path):
    with pytest.raises(ConfigurationError):
        read_ini(tmp_path / "missing.ini")
    bad = tmp_path / "bad.ini"
    bad.write_text("[model]\nlayers = 3\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        read_ini(bad)


def test_digest_ignores_run_control_fields():
    base = load_config()
    assert len(base.digest()) == 16
    assert base.digest() == load_config(None, ["eval.seeds=7", "eval.workers=3", "eval.out_dir=elsewhere"]).digest()
    assert base.digest() != load_config(None, ["defense.rho=3"]).digest()


def test_with_values_revalidates():
    config = load_config()
    updated = config.with_values({"defense.rho": 4.0})
    assert updated.defense.rho == 4.0
    assert config.defense.rho == 2.0
    with pytest.raises(ConfigurationError):
        config.with_values({"attack.adaptive_eta": 2.0})


def test_dump_ini_roundtrip(tmp_path):
    config = load_config(CONFIG_DIR / "multi_attacker.ini", ["defense.purify_mode=replace_flagged_only"])
    path = tmp_path / "config.ini"
    path.write_text(dump_ini(config, config_digest=config.digest()), encoding="utf-8")
    assert path.read_text(encoding="utf-8").splitlines()[0] == f"# config_digest={config.digest()}"
    restored = load_config(path)
    assert isinstance(restored, ExperimentConfig)
    assert restored.digest() == config.digest()
    assert restored.attack_plan() == config.attack_plan()
