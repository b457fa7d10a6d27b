from src.attacks.adaptive import adaptive_schedule
from src.attacks.attacker import AttackerHook
from src.attacks.badvfl import badvfl_poison, build_feature_trigger, stamp_trigger
from src.attacks.label_inference import SwapLabelInference, candidate_count, swap_decision
from src.attacks.plan import (
    BADVFL,
    NON_TARGET,
    TARGET,
    UNKNOWN,
    VILLAIN,
    AttackPlan,
    FeatureTriggerSpec,
    InferredLabels,
    TriggerSpec,
    load_triggers,
    middle_attackers,
    save_triggers,
)
from src.attacks.villain import villain_build_trigger, villain_inject, villain_pattern
