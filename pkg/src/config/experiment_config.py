"""
实验配置：分节的 INI 文件 + 命令行覆盖项

    [data] [vfl] [attack] [defense] [eval]

各节由 pydantic 模型校验（未知键直接拒绝），跨节约束在 ExperimentConfig 中统一检查。
"""
import configparser
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.attacks.plan import BADVFL, VILLAIN, AttackPlan, middle_attackers
from src.utils.errors import ConfigurationError

SECTIONS = ("data", "vfl", "attack", "defense", "eval")

# 不参与摘要计算的运行控制字段
RUN_CONTROL_FIELDS = {"eval": ("seeds", "out_dir", "workers")}


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DataSection(_Section):
    source: Literal["synthetic", "csv"] = "synthetic"
    csv_path: Optional[str] = None
    label_column: str = "label"
    n_classes: int = Field(5, ge=2)
    dim: int = Field(40, ge=1)
    separation: float = Field(2.0, gt=0)
    noise_std: float = Field(1.0, gt=0)
    k_train: int = Field(8000, ge=1)
    k_test: int = Field(2000, ge=1)
    k_aux: int = Field(500, ge=1)
    normalize: bool = True
    # CSV 行划分比例（train/test/aux）
    split_fractions: List[float] = Field(default_factory=lambda: [0.8, 0.15, 0.05])

    @field_validator("split_fractions", mode="before")
    @classmethod
    def split_fraction_list(cls, value):
        return _split_list(value)

    @field_validator("csv_path", mode="before")
    @classmethod
    def empty_path_is_none(cls, value):
        return value or None


class VflSection(_Section):
    n_participants: int = Field(4, ge=2)
    embedding_dim: int = Field(16, ge=1)
    epochs: int = Field(30, ge=1)
    learning_rate: float = Field(0.1, gt=0)
    batch_size: int = Field(128, ge=1)
    bottom_layers: int = Field(4, ge=1)
    bottom_hidden: int = Field(64, ge=1)
    top_layers: int = Field(3, ge=1)
    top_hidden: int = Field(64, ge=1)


class AttackSection(_Section):
    kind: Literal["none", "badvfl", "villain"] = VILLAIN
    # 为空时按 n_attackers 放在中间参与方
    attacker_indices: List[int] = Field(default_factory=list)
    n_attackers: int = Field(1, ge=1)
    target_label: int = Field(0, ge=0)
    poisoning_budget: float = Field(0.5, gt=0, le=1)
    e_bkd: int = Field(5, ge=0)
    label_knowledge: bool = True
    lr_amplify: float = Field(2.0, gt=0)
    adaptive_eta: float = Field(0.0, ge=0, le=1)
    gamma: float = Field(3.0, ge=0)
    m_fraction: float = Field(0.75, gt=0, le=1)
    aug_drop_prob: float = Field(0.1, ge=0, le=1)
    aug_scale_min: float = Field(0.6, gt=0)
    aug_scale_max: float = Field(1.2, gt=0)
    trigger_width: int = Field(8, ge=1)
    trigger_value: float = 1.0

    @field_validator("attacker_indices", mode="before")
    @classmethod
    def attacker_index_list(cls, value):
        return _split_list(value)


class DefenseSection(_Section):
    mode: Literal["none", "vflip", "bdt"] = "vflip"
    mae_epochs: int = Field(20, ge=1)
    mae_lr_n1: float = Field(0.01, gt=0)
    mae_lr_11: float = Field(0.1, gt=0)
    dropout_prob: float = Field(0.1, ge=0, lt=1)
    mae_batch_size: int = Field(128, ge=1)
    mae_hidden: int = Field(128, ge=1)
    mae_latent: int = Field(64, ge=1)
    mae_strategy: Literal["both", "n_minus_one", "one_to_one"] = "both"
    rho: float = Field(2.0, ge=0)
    purify_mode: Literal["reconstruct_all", "replace_flagged_only"] = "reconstruct_all"
    score_space: Literal["standardized", "raw"] = "standardized"
    # BDT 基线的噪声标准差
    noise_std: float = Field(0.0, ge=0)


class EvalSection(_Section):
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2])
    out_dir: Optional[str] = None
    workers: Optional[int] = Field(None, ge=1)

    @field_validator("seeds", mode="before")
    @classmethod
    def seed_list(cls, value):
        return _split_list(value)

    @field_validator("out_dir", "workers", mode="before")
    @classmethod
    def empty_is_none(cls, value):
        return None if value == "" else value


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    data: DataSection = Field(default_factory=DataSection)
    vfl: VflSection = Field(default_factory=VflSection)
    attack: AttackSection = Field(default_factory=AttackSection)
    defense: DefenseSection = Field(default_factory=DefenseSection)
    eval: EvalSection = Field(default_factory=EvalSection)

    @model_validator(mode="after")
    def check_cross_fields(self) -> "ExperimentConfig":
        if self.data.source == "csv" and not self.data.csv_path:
            raise ValueError("data.source=csv 时必须提供 data.csv_path")
        if self.data.source == "synthetic" and self.vfl.n_participants > self.data.dim:
            raise ValueError(f"vfl.n_participants={self.vfl.n_participants} 超过特征数 data.dim={self.data.dim}")
        if not self.eval.seeds:
            raise ValueError("eval.seeds 不能为空")
        if self.attack.aug_scale_min > self.attack.aug_scale_max:
            raise ValueError("attack.aug_scale_min 不能大于 attack.aug_scale_max")
        plan = self.attack_plan()
        if plan is not None:
            plan.validate(self.vfl.n_participants, self.vfl.epochs, self.data.n_classes)
        return self

    def attack_plan(self) -> Optional[AttackPlan]:
        """attack.kind=none 时返回 None"""
        section = self.attack
        if section.kind == "none":
            return None
        indices = tuple(section.attacker_indices) or middle_attackers(self.vfl.n_participants, section.n_attackers)
        return AttackPlan(
            attacker_indices=indices,
            kind=BADVFL if section.kind == BADVFL else VILLAIN,
            target_label=section.target_label,
            poisoning_budget=section.poisoning_budget,
            e_bkd=section.e_bkd,
            label_knowledge=section.label_knowledge,
            lr_amplify=section.lr_amplify,
            adaptive_eta=section.adaptive_eta,
            gamma=section.gamma,
            m_fraction=section.m_fraction,
            aug_drop_prob=section.aug_drop_prob,
            aug_scale_range=(section.aug_scale_min, section.aug_scale_max),
            trigger_width=section.trigger_width,
            trigger_value=section.trigger_value,
        )

    def digest(self) -> str:
        """规范化 JSON 的 SHA-256 前 16 位（不含运行控制字段）"""
        payload = self.model_dump(mode="json")
        for section, fields in RUN_CONTROL_FIELDS.items():
            for name in fields:
                payload[section].pop(name, None)
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def with_values(self, updates: Dict[str, Any]) -> "ExperimentConfig":
        """按 "section.key" 更新字段并重新校验，返回新配置"""
        payload = self.model_dump()
        for dotted, value in updates.items():
            section, key = _split_key(dotted)
            payload[section][key] = value
        return validate_config(payload)


def _split_key(dotted: str) -> Tuple[str, str]:
    if "." not in dotted:
        raise ConfigurationError(f"配置键必须形如 section.key，当前为 '{dotted}'")
    section, key = dotted.split(".", 1)
    if section not in SECTIONS:
        raise ConfigurationError(f"未知的配置节 '{section}'（可选: {', '.join(SECTIONS)}）")
    return section, key


def _describe(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<config>"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def validate_config(payload: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as e:
        raise ConfigurationError(f"配置校验失败: {_describe(e)}") from e


def parse_overrides(overrides: Iterable[str]) -> Dict[str, str]:
    """解析 --set section.key=value 列表"""
    parsed: Dict[str, str] = {}
    for item in overrides or ():
        if "=" not in item:
            raise ConfigurationError(f"覆盖项必须形如 section.key=value，当前为 '{item}'")
        key, value = item.split("=", 1)
        _split_key(key.strip())
        parsed[key.strip()] = value.strip()
    return parsed


def read_ini(path: Union[str, Path]) -> Dict[str, Dict[str, str]]:
    source = Path(path)
    if not source.exists():
        raise ConfigurationError(f"配置文件不存在: {source}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read(source, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigurationError(f"配置文件 {source} 解析失败: {e}") from e
    unknown = [name for name in parser.sections() if name not in SECTIONS]
    if unknown:
        raise ConfigurationError(f"配置文件 {source} 含未知的节: {unknown}")
    return {name: dict(parser.items(name)) for name in parser.sections()}


def load_config(path: Optional[Union[str, Path]] = None, overrides: Iterable[str] = ()) -> ExperimentConfig:
    """
    读取配置文件并应用覆盖项

    Args:
        path: INI 配置路径，为 None 时使用全部默认值
        overrides: ["attack.gamma=2", ...]
    """
    payload: Dict[str, Dict[str, Any]] = {name: {} for name in SECTIONS}
    if path is not None:
        for name, values in read_ini(path).items():
            payload[name].update(values)
    for dotted, value in parse_overrides(overrides).items():
        section, key = _split_key(dotted)
        payload[section][key] = value
    return validate_config(payload)


def dump_ini(config: ExperimentConfig, config_digest: Optional[str] = None) -> str:
    """把配置写回 INI 文本（列表以逗号连接），可在首行写入摘要注释"""
    lines: List[str] = [f"# config_digest={config_digest}"] if config_digest else []
    for name, values in config.model_dump().items():
        lines.append(f"[{name}]")
        for key, value in values.items():
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            lines.append(f"{key} = {'' if value is None else value}")
        lines.append("")
    return "\n".join(lines)
