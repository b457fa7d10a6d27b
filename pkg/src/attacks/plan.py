"""
恶意参与方的攻击计划与触发器类型
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from src.utils.errors import ArtifactError, ConfigurationError, parsing_artifact
from src.utils.kv_format import kv_lines, parse_kv, parse_vector

BADVFL = "badvfl"
VILLAIN = "villain"
ATTACK_KINDS = (BADVFL, VILLAIN)


def middle_attackers(n_participants: int, n_attackers: int) -> Tuple[int, ...]:
    """默认把攻击者放在持有中间特征的参与方上"""
    start = (n_participants - n_attackers) // 2
    return tuple(range(start, start + n_attackers))


@dataclass(frozen=True)
class AttackPlan:
    """恶意参与方的完整策略"""
    attacker_indices: Tuple[int, ...]
    kind: str = VILLAIN
    target_label: int = 0
    poisoning_budget: float = 0.5
    e_bkd: int = 5
    label_knowledge: bool = True
    lr_amplify: float = 2.0
    adaptive_eta: float = 0.0
    # VILLAIN 触发器
    gamma: float = 3.0
    m_fraction: float = 0.75
    aug_drop_prob: float = 0.1
    aug_scale_range: Tuple[float, float] = (0.6, 1.2)
    # BadVFL 触发器
    trigger_width: int = 8
    trigger_value: float = 1.0

    def validate(self, n_participants: int, total_epochs: int, n_classes: int) -> "AttackPlan":
        if self.kind not in ATTACK_KINDS:
            raise ConfigurationError(f"不支持的攻击类型: {self.kind}")
        if not self.attacker_indices:
            raise ConfigurationError("attacker_indices 不能为空")
        if len(set(self.attacker_indices)) != len(self.attacker_indices):
            raise ConfigurationError(f"attacker_indices 存在重复: {self.attacker_indices}")
        if any(i < 0 or i >= n_participants for i in self.attacker_indices):
            raise ConfigurationError(f"attacker_indices {self.attacker_indices} 超出参与方范围 [0, {n_participants})")
        if not len(self.attacker_indices) < n_participants / 2:
            raise ConfigurationError(
                f"攻击者数量 {len(self.attacker_indices)} 必须少于参与方数量的一半 ({n_participants}/2)"
            )
        if not 0 <= self.target_label < n_classes:
            raise ConfigurationError(f"target_label {self.target_label} 超出类别范围 [0, {n_classes})")
        if not 0 < self.poisoning_budget <= 1:
            raise ConfigurationError(f"poisoning_budget 必须在 (0, 1] 内，当前为 {self.poisoning_budget}")
        if not 0 <= self.e_bkd < total_epochs:
            raise ConfigurationError(f"e_bkd 必须在 [0, {total_epochs}) 内，当前为 {self.e_bkd}")
        if self.lr_amplify <= 0:
            raise ConfigurationError(f"lr_amplify 必须 > 0，当前为 {self.lr_amplify}")
        if not 0 <= self.adaptive_eta <= 1:
            raise ConfigurationError(f"adaptive_eta 必须在 [0, 1] 内，当前为 {self.adaptive_eta}")
        if not 0 < self.m_fraction <= 1:
            raise ConfigurationError(f"m_fraction 必须在 (0, 1] 内，当前为 {self.m_fraction}")
        if not 0 <= self.aug_drop_prob <= 1:
            raise ConfigurationError(f"aug_drop_prob 必须在 [0, 1] 内，当前为 {self.aug_drop_prob}")
        low, high = self.aug_scale_range
        if not 0 < low <= high:
            raise ConfigurationError(f"aug_scale_range 不合法: {self.aug_scale_range}")
        if self.trigger_width < 1:
            raise ConfigurationError(f"trigger_width 必须 >= 1，当前为 {self.trigger_width}")
        return self

    @property
    def lead(self) -> int:
        """执行标签推断的主攻击者（下标最小者）"""
        return min(self.attacker_indices)

    def backdoor_active(self, epoch: int) -> bool:
        """训练完 E_bkd 轮之后开始注入"""
        return epoch > self.e_bkd


@dataclass(frozen=True)
class TriggerSpec:
    """VILLAIN 嵌入级触发器：在 dims 上叠加 value_pattern"""
    dims: np.ndarray
    value_pattern: np.ndarray
    gamma: float
    sigma_bar: float
    aug_drop_prob: float = 0.1
    aug_scale_range: Tuple[float, float] = (0.6, 1.2)

    def to_dict(self) -> Dict[str, object]:
        return {
            "type": VILLAIN,
            "dims": [int(d) for d in self.dims],
            "value_pattern": self.value_pattern,
            "gamma": self.gamma,
            "sigma_bar": self.sigma_bar,
            "aug_drop_prob": self.aug_drop_prob,
            "aug_scale_range": list(self.aug_scale_range),
        }


@dataclass(frozen=True)
class FeatureTriggerSpec:
    """BadVFL 静态特征触发器：把攻击者特征块的 [start, end) 列改写为常数 value"""
    start: int
    end: int
    value: float = 1.0

    def to_dict(self) -> Dict[str, object]:
        return {"type": BADVFL, "start": self.start, "end": self.end, "value": self.value}


def trigger_from_dict(values: Dict[str, str]) -> Union[TriggerSpec, FeatureTriggerSpec]:
    if values.get("type") == BADVFL:
        return FeatureTriggerSpec(start=int(values["start"]), end=int(values["end"]), value=float(values["value"]))
    if values.get("type") == VILLAIN:
        dims_text = values.get("dims", "")
        scale = parse_vector(values["aug_scale_range"])
        return TriggerSpec(
            dims=np.array([int(d) for d in dims_text.split(",")] if dims_text else [], dtype=np.int64),
            value_pattern=parse_vector(values.get("value_pattern", "")),
            gamma=float(values["gamma"]),
            sigma_bar=float(values["sigma_bar"]),
            aug_drop_prob=float(values["aug_drop_prob"]),
            aug_scale_range=(float(scale[0]), float(scale[1])),
        )
    raise ArtifactError(f"无法识别的触发器类型: {values.get('type')}")


def save_triggers(triggers: Dict[int, Union[TriggerSpec, FeatureTriggerSpec]], path: Union[str, Path], config_digest: Optional[str] = None):
    """每个攻击者一个 [participant.<i>] 段"""
    lines = []
    if config_digest:
        lines.append(f"# config_digest={config_digest}")
    for participant, trigger in sorted(triggers.items()):
        lines.append(f"[participant.{participant}]")
        lines.extend(kv_lines(trigger.to_dict()))
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_triggers(path: Union[str, Path]) -> Dict[int, Union[TriggerSpec, FeatureTriggerSpec]]:
    source = Path(path)
    if not source.exists():
        raise ArtifactError(f"触发器文件不存在: {source}")
    sections: Dict[int, list] = {}
    current: Optional[int] = None
    with parsing_artifact(source):
        for raw in source.read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if line.startswith("[participant.") and line.endswith("]"):
                current = int(line[len("[participant."):-1])
                sections[current] = []
            elif current is not None:
                sections[current].append(line)
        return {participant: trigger_from_dict(parse_kv(lines)) for participant, lines in sections.items()}


TARGET = 1
NON_TARGET = 0
UNKNOWN = -1


@dataclass
class InferredLabels:
    """攻击者对每个训练样本的标签判断：目标 / 非目标 / 未知"""
    flags: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int8))

    @classmethod
    def unknown(cls, n_rows: int) -> "InferredLabels":
        return cls(flags=np.full(n_rows, UNKNOWN, dtype=np.int8))

    @classmethod
    def from_ground_truth(cls, labels: np.ndarray, target_label: int) -> "InferredLabels":
        return cls(flags=np.where(np.asarray(labels) == target_label, TARGET, NON_TARGET).astype(np.int8))

    def target_positions(self) -> np.ndarray:
        return np.flatnonzero(self.flags == TARGET)

    def non_target_positions(self) -> np.ndarray:
        return np.flatnonzero(self.flags == NON_TARGET)

    def coverage(self) -> float:
        """已判定样本的比例"""
        if self.flags.size == 0:
            return 0.0
        return float(np.mean(self.flags != UNKNOWN))

    def accuracy(self, true_labels: np.ndarray, target_label: int) -> float:
        """已判定样本上与真实标签一致的比例；无已判定样本时返回 nan"""
        decided = self.flags != UNKNOWN
        if not decided.any():
            return float("nan")
        truth = np.where(np.asarray(true_labels) == target_label, TARGET, NON_TARGET)
        return float(np.mean(self.flags[decided] == truth[decided]))
