# 恶意参与方：标签推断、BadVFL、VILLAIN、自适应攻击与攻击钩子
from dataclasses import replace

import numpy as np
import pytest

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
    load_triggers,
    middle_attackers,
    save_triggers,
)
from src.attacks.villain import villain_build_trigger, villain_inject, villain_pattern
from src.data.partition import partition_vertical
from src.nn.mlp import SgdConfig
from src.utils.errors import ArtifactError, ConfigurationError
from src.vfl.hooks import INFER
from src.vfl.protocol import collect_embeddings, train_vfl
from src.vfl.session import create_session


# ---- 标签推断 ----

@pytest.mark.parametrize("g_prev, mean, g_swap, expected", [
    (0.1, 0.5, 0.5, True),
    (0.1, 0.5, 2.0, False),
    (0.6, 0.5, 0.1, False),
    (0.1, 0.5, 1.0, False),
])
def test_swap_decision(g_prev, mean, g_swap, expected):
    assert swap_decision(g_prev, mean, g_swap) is expected


def test_candidate_count():
    assert candidate_count(0.1, 128) == 38
    assert candidate_count(0.5, 128) == 192


def _grad(magnitudes):
    grad = np.zeros((len(magnitudes), 2))
    grad[:, 0] = magnitudes
    return grad


def test_swap_inference_observes_then_swaps_and_decides():
    inference = SwapLabelInference(
        n_train=10, aux_target_embeddings=np.array([[7.0, 7.0]]), budget=1.0, batch_size=10,
        rng=np.random.default_rng(0),
    )
    idx = np.arange(10)
    h = np.zeros((10, 2))

    first = inference.prepare_batch(idx, h)
    assert np.array_equal(first, h)
    inference.observe(idx, _grad([0.1] * 5 + [1.0] * 5))
    assert inference.pending.all()

    second = inference.prepare_batch(idx, h)
    assert np.all(second == 7.0)
    local = inference.observe(idx, _grad([0.5, 0.5, 5.0, 5.0, 5.0] + [0.5] * 5))
    assert np.all(local == 0.0)
    assert inference.inferred.flags.tolist() == [TARGET, TARGET] + [NON_TARGET] * 8
    assert not inference.pending.any()


def test_swap_inference_requires_aux_targets():
    with pytest.raises(ConfigurationError):
        SwapLabelInference(5, np.zeros((0, 2)), 0.5, 4, np.random.default_rng(0))


def test_inferred_labels_accuracy_and_coverage():
    inferred = InferredLabels(flags=np.array([TARGET, NON_TARGET, UNKNOWN, TARGET], dtype=np.int8))
    labels = np.array([0, 1, 0, 2])
    assert inferred.coverage() == pytest.approx(0.75)
    assert inferred.accuracy(labels, target_label=0) == pytest.approx(2 / 3)
    assert np.isnan(InferredLabels.unknown(3).accuracy(labels[:3], 0))
    assert InferredLabels.from_ground_truth(labels, 0).target_positions().tolist() == [0, 2]


# ---- BadVFL ----

def test_feature_trigger_window_is_clipped_to_block():
    assert build_feature_trigger(5, width=8) == FeatureTriggerSpec(start=0, end=5, value=1.0)
    assert build_feature_trigger(10, width=3).end == 3


def test_badvfl_replaces_then_stamps():
    trigger = FeatureTriggerSpec(start=0, end=2, value=1.0)
    batch = np.zeros((3, 4))
    donors = np.full((1, 4), 0.3)
    poisoned = badvfl_poison(batch, np.array([1]), donors, trigger)
    assert poisoned[1].tolist() == [1.0, 1.0, 0.3, 0.3]
    assert np.all(poisoned[[0, 2]] == 0.0)
    assert np.all(batch == 0.0)


def test_badvfl_without_donors_or_rows_is_a_no_op():
    trigger = FeatureTriggerSpec(start=0, end=2)
    batch = np.zeros((3, 4))
    assert np.array_equal(badvfl_poison(batch, np.array([0]), None, trigger), batch)
    assert np.array_equal(badvfl_poison(batch, np.array([], dtype=int), np.ones((0, 4)), trigger), batch)


def test_stamp_trigger_only_touches_window():
    stamped = stamp_trigger(np.zeros((2, 5)), np.array([0]), FeatureTriggerSpec(start=1, end=3, value=0.9))
    assert stamped[0].tolist() == [0.0, 0.9, 0.9, 0.0, 0.0]
    assert np.all(stamped[1] == 0.0)


# ---- VILLAIN ----

def test_villain_pattern():
    assert villain_pattern(0.5, 3.0, 4).tolist() == [1.5, 1.5, -1.5, -1.5]
    assert villain_pattern(1.0, 1.0, 5).tolist() == [1.0, 1.0, -1.0, -1.0, 1.0]


def test_villain_selects_highest_std_dims():
    stds = np.array([0.1, 0.9, 0.5, 0.7])
    embeddings = np.vstack([-stds, stds])
    trigger = villain_build_trigger(embeddings, m_fraction=0.5, gamma=3.0)
    assert trigger.dims.tolist() == [1, 3]
    assert trigger.sigma_bar == pytest.approx(0.8)
    assert trigger.value_pattern.tolist() == pytest.approx([2.4, 2.4])


def test_villain_dims_follow_column_permutation(rng):
    embeddings = rng.normal(size=(50, 6)) * np.array([1.0, 3.0, 0.5, 2.0, 4.0, 0.2])
    perm = np.array([5, 2, 0, 4, 1, 3])
    original = villain_build_trigger(embeddings, m_fraction=0.5)
    permuted = villain_build_trigger(embeddings[:, perm], m_fraction=0.5)
    assert set(perm[permuted.dims].tolist()) == set(original.dims.tolist())
    assert permuted.sigma_bar == pytest.approx(original.sigma_bar)


def test_villain_needs_two_rows():
    with pytest.raises(ConfigurationError):
        villain_build_trigger(np.ones((1, 4)))


def test_villain_inject_without_augmentation():
    trigger = villain_build_trigger(np.vstack([-np.ones(4), np.ones(4)]), m_fraction=0.5, gamma=2.0)
    h = np.zeros((3, 4))
    out = villain_inject(h, np.array([0, 2]), trigger)
    assert np.array_equal(out[1], h[1])
    assert out[0, trigger.dims].tolist() == [2.0, 2.0]
    mask = np.ones(4, dtype=bool)
    mask[trigger.dims] = False
    assert np.all(out[:, mask] == 0.0)


def test_villain_augmentation_extremes(rng):
    base = villain_build_trigger(np.vstack([-np.ones(4), np.ones(4)]), m_fraction=1.0)
    h = np.zeros((5, 4))
    rows = np.arange(5)
    identity_aug = replace(base, aug_drop_prob=0.0, aug_scale_range=(1.0, 1.0))
    assert np.allclose(villain_inject(h, rows, identity_aug, rng=rng, augment=True), villain_inject(h, rows, base))
    drop_all = replace(base, aug_drop_prob=1.0)
    assert np.array_equal(villain_inject(h, rows, drop_all, rng=rng, augment=True), h)


# ---- 自适应攻击 ----

def test_adaptive_schedule():
    flags = np.array([TARGET, NON_TARGET, NON_TARGET, UNKNOWN])
    rng = np.random.default_rng(0)
    assert adaptive_schedule(5, 5, 0.0, flags, rng).size == 0
    assert adaptive_schedule(4, 5, 1.0, flags, rng).size == 0
    assert adaptive_schedule(5, 5, 1.0, flags, rng).tolist() == [1, 2]


# ---- 攻击计划 ----

def test_middle_attackers():
    assert middle_attackers(4, 1) == (1,)
    assert middle_attackers(8, 3) == (2, 3, 4)


@pytest.mark.parametrize("kwargs", [
    {"attacker_indices": (0, 1)},
    {"attacker_indices": (4,)},
    {"attacker_indices": (1,), "e_bkd": 10},
    {"attacker_indices": (1,), "poisoning_budget": 0.0},
    {"attacker_indices": (1,), "target_label": 3},
    {"attacker_indices": (1,), "kind": "blend"},
])
def test_attack_plan_validation(kwargs):
    with pytest.raises(ConfigurationError):
        AttackPlan(**kwargs).validate(n_participants=4, total_epochs=10, n_classes=3)


def test_trigger_file_roundtrip(tmp_path):
    villain = villain_build_trigger(np.vstack([-np.arange(4.0), np.arange(4.0)]), m_fraction=0.5)
    triggers = {1: villain, 2: FeatureTriggerSpec(start=0, end=3, value=1.0)}
    save_triggers(triggers, tmp_path / "triggers.txt", config_digest="d1")
    restored = load_triggers(tmp_path / "triggers.txt")
    assert restored[2] == triggers[2]
    assert restored[1].dims.tolist() == villain.dims.tolist()
    assert np.array_equal(restored[1].value_pattern, villain.value_pattern)
    assert restored[1].sigma_bar == villain.sigma_bar


@pytest.mark.parametrize("edit", [
    lambda line: "gamma=three" if line.startswith("gamma=") else line,
    lambda line: "dims=0,one" if line.startswith("dims=") else line,
    lambda line: None if line.startswith("sigma_bar=") else line,
    lambda line: None if line.startswith("end=") else line,
    lambda line: "[participant.x]" if line == "[participant.2]" else line,
    lambda line: "type=blend" if line == "type=badvfl" else line,
])
def test_corrupt_trigger_file_raises_artifact_error(tmp_path, edit):
    path = tmp_path / "triggers.txt"
    villain = villain_build_trigger(np.vstack([-np.arange(4.0), np.arange(4.0)]), m_fraction=0.5)
    save_triggers({1: villain, 2: FeatureTriggerSpec(start=0, end=3)}, path)
    lines = [edit(line) for line in path.read_text(encoding="utf-8").splitlines()]
    path.write_text("\n".join(line for line in lines if line is not None) + "\n", encoding="utf-8")
    with pytest.raises(ArtifactError):
        load_triggers(path)


def test_missing_trigger_file_raises_artifact_error(tmp_path):
    with pytest.raises(ArtifactError):
        load_triggers(tmp_path / "missing.txt")


# ---- 攻击钩子 ----

def _hook(plan, data, label_knowledge=True):
    return AttackerHook(
        plan=plan,
        train_blocks={p: data.train.blocks[p] for p in plan.attacker_indices},
        aux=data.aux,
        train_labels=data.train.labels if label_knowledge else None,
        batch_size=32,
        seed=3,
    )


def test_villain_hook_is_clean_label(tiny_session, tiny_data):
    plan = AttackPlan(attacker_indices=(1,), kind=VILLAIN, e_bkd=1, poisoning_budget=0.5).validate(4, 3, 3)
    hook = _hook(plan, tiny_data)
    train_vfl(tiny_session, tiny_data.train, epochs=3, hooks=[hook])

    n_target = int(np.sum(tiny_data.train.labels == 0))
    assert hook.poisoned.sum() == round(0.5 * n_target)
    assert hook.triggered_rows
    assert np.all(tiny_data.train.labels[sorted(hook.triggered_rows)] == 0)
    assert hook.clean_label_violations().size == 0
    assert hook.triggers[1].dims.size == 3
    assert tiny_session.lr_scale[1] == 1.0


def test_hook_amplifies_learning_rate_before_injection(tiny_session, tiny_data):
    plan = AttackPlan(attacker_indices=(1,), e_bkd=2).validate(4, 5, 3)
    hook = _hook(plan, tiny_data)
    hook.on_train_start(tiny_session, tiny_data.train.n_rows, 5)
    hook.on_epoch_start(tiny_session, 1, 5)
    assert tiny_session.lr_scale.tolist() == [1.0, 2.0, 1.0, 1.0]
    hook.on_epoch_start(tiny_session, 3, 5)
    assert tiny_session.lr_scale.tolist() == [1.0, 1.0, 1.0, 1.0]


def test_badvfl_hook_stamps_every_row_at_inference(tiny_session, tiny_data):
    plan = AttackPlan(attacker_indices=(1,), kind=BADVFL, e_bkd=1, trigger_width=2).validate(4, 2, 3)
    hook = _hook(plan, tiny_data)
    train_vfl(tiny_session, tiny_data.train, epochs=2, hooks=[hook])
    block = tiny_data.test.blocks[1]
    stamped = hook.on_local_batch(1, block, np.arange(block.shape[0]), 0, INFER)
    assert np.all(stamped[:, :2] == 1.0)
    assert np.array_equal(stamped[:, 2:], block[:, 2:])
    assert hook.clean_label_violations().size == 0


def test_villain_hook_shifts_attacker_embeddings_at_inference(tiny_session, tiny_data):
    plan = AttackPlan(attacker_indices=(1,), e_bkd=1).validate(4, 2, 3)
    hook = _hook(plan, tiny_data)
    train_vfl(tiny_session, tiny_data.train, epochs=2, hooks=[hook])
    clean = collect_embeddings(tiny_session, tiny_data.test)
    triggered = collect_embeddings(tiny_session, tiny_data.test, attacker_hooks_active=True, hooks=[hook])
    trigger = hook.triggers[1]
    delta = triggered.blocks[1] - clean.blocks[1]
    assert np.allclose(delta[:, trigger.dims], trigger.value_pattern)
    for i in (0, 2, 3):
        assert np.array_equal(triggered.blocks[i], clean.blocks[i])


def test_label_inference_hook_decides_some_rows(tiny_session, tiny_data):
    plan = AttackPlan(attacker_indices=(1,), e_bkd=2, label_knowledge=False, poisoning_budget=0.5).validate(4, 3, 3)
    hook = _hook(plan, tiny_data, label_knowledge=False)
    train_vfl(tiny_session, tiny_data.train, epochs=3, hooks=[hook])
    assert hook.inferred.coverage() > 0
    assert hook.clean_label_violations().size == 0
    assert not np.isnan(hook.inferred.accuracy(tiny_data.train.labels, 0))


def test_label_inference_hook_requires_aux_target(tiny_data):
    plan = AttackPlan(attacker_indices=(1,), label_knowledge=False, target_label=0)
    aux = tiny_data.aux.subset(np.flatnonzero(tiny_data.aux.labels != 0))
    with pytest.raises(ConfigurationError):
        AttackerHook(plan, {1: tiny_data.train.blocks[1]}, aux=aux)


def test_adaptive_hook_triggers_non_target_rows_in_last_epoch(tiny_session, tiny_data):
    plan = AttackPlan(attacker_indices=(1,), e_bkd=1, adaptive_eta=1.0).validate(4, 2, 3)
    hook = _hook(plan, tiny_data)
    train_vfl(tiny_session, tiny_data.train, epochs=2, hooks=[hook])
    adaptive = sorted(hook.adaptive_rows)
    assert len(adaptive) == int(np.sum(tiny_data.train.labels != 0))
    assert np.all(tiny_data.train.labels[adaptive] != 0)
    assert hook.clean_label_violations().size == 0


def test_multiple_attackers_share_poisoned_rows(tiny_dataset):
    data = partition_vertical(tiny_dataset, 5, (300 / 420, 90 / 420, 30 / 420), seed=2)
    widths = [data.spec.block_width(i) for i in range(5)]
    session = create_session(widths, 4, 3, SgdConfig(0.1, 32), seed=0, bottom_layers=2, bottom_hidden=8, top_layers=2, top_hidden=8)
    plan = AttackPlan(attacker_indices=(1, 2), e_bkd=1).validate(5, 3, 3)
    hook = _hook(plan, data)
    train_vfl(session, data.train, epochs=3, hooks=[hook])

    assert set(hook.triggers) == {1, 2}
    clean = collect_embeddings(session, data.test)
    triggered = collect_embeddings(session, data.test, attacker_hooks_active=True, hooks=[hook])
    for p in (1, 2):
        assert not np.array_equal(triggered.blocks[p], clean.blocks[p])
    for p in (0, 3, 4):
        assert np.array_equal(triggered.blocks[p], clean.blocks[p])
