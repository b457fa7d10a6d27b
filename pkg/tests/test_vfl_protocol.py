# 拆分式 VFL 协议：会话、训练、推理、钩子与检查点
import numpy as np
import pytest

from src.nn.losses import softmax_cross_entropy
from src.nn.mlp import SgdConfig, mlp_forward
from src.utils.errors import ArtifactError, ConfigurationError, ShapeError
from src.vfl.checkpoint import load_session, save_session
from src.vfl.hooks import TRAIN, VflHook, identity_defense
from src.vfl.protocol import collect_embeddings, infer, server_step, train_vfl
from src.vfl.session import EmbeddingBatch, create_session, fcn_dims


def test_fcn_dims():
    assert fcn_dims(10, 64, 16, 4) == [10, 64, 64, 64, 16]
    assert fcn_dims(10, 64, 16, 1) == [10, 16]
    with pytest.raises(ConfigurationError):
        fcn_dims(10, 64, 16, 0)


def test_session_shapes(tiny_session):
    assert tiny_session.n_participants == 4
    assert tiny_session.concat_dim == 16
    assert tiny_session.top_model.input_dim == 16
    assert tiny_session.block_slice(2) == slice(8, 12)


def test_training_reduces_loss_and_collects_store(tiny_session, tiny_data):
    stats, store = train_vfl(tiny_session, tiny_data.train, epochs=12)
    assert [s.epoch for s in stats] == list(range(1, 13))
    assert stats[-1].mean_loss < stats[0].mean_loss
    assert store.embeddings.shape == (300, 16)
    assert np.array_equal(store.labels, tiny_data.train.labels)


def test_training_is_deterministic(tiny_data):
    def trained():
        widths = [tiny_data.spec.block_width(i) for i in range(4)]
        session = create_session(widths, 4, 3, SgdConfig(0.1, 32), seed=5, bottom_layers=2, bottom_hidden=8, top_layers=2, top_hidden=8)
        train_vfl(session, tiny_data.train, epochs=2)
        return session

    a, b = trained(), trained()
    for model_a, model_b in zip(a.bottom_models + [a.top_model], b.bottom_models + [b.top_model]):
        for pa, pb in zip(model_a.parameters(), model_b.parameters()):
            assert np.array_equal(pa, pb)


def test_server_gradient_matches_finite_difference(tiny_session, tiny_data):
    embeddings = collect_embeddings(tiny_session, tiny_data.test.subset(np.arange(8)))
    labels = tiny_data.test.labels[:8]
    _, _, gradients = server_step(tiny_session, embeddings, labels, update=False)
    assert gradients.matches(embeddings)

    concatenated = embeddings.concatenated
    eps = 1e-6
    for participant, column in ((0, 1), (3, 2)):
        col = tiny_session.block_slice(participant).start + column
        plus, minus = concatenated.copy(), concatenated.copy()
        plus[2, col] += eps
        minus[2, col] -= eps
        loss_plus = softmax_cross_entropy(mlp_forward(tiny_session.top_model, plus)[1], labels)[0]
        loss_minus = softmax_cross_entropy(mlp_forward(tiny_session.top_model, minus)[1], labels)[0]
        numeric = (loss_plus - loss_minus) / (2 * eps)
        assert gradients.blocks[participant][2, column] == pytest.approx(numeric, rel=1e-4, abs=1e-8)


def test_server_step_without_update_keeps_top(tiny_session, tiny_data):
    before = tiny_session.top_model.copy()
    embeddings = collect_embeddings(tiny_session, tiny_data.test)
    server_step(tiny_session, embeddings, tiny_data.test.labels, update=False)
    for a, b in zip(before.parameters(), tiny_session.top_model.parameters()):
        assert np.array_equal(a, b)


class _ZeroEmbedding(VflHook):
    def __init__(self, participant):
        self.participants = (participant,)
        self.seen_phases = set()

    def on_embedding(self, participant, h_block, idx, epoch, phase):
        self.seen_phases.add(phase)
        return np.zeros_like(h_block)


class _BadShape(VflHook):
    participants = (1,)

    def on_embedding(self, participant, h_block, idx, epoch, phase):
        return h_block[:, :-1]


def test_hooks_modify_only_their_block(tiny_session, tiny_data):
    hook = _ZeroEmbedding(2)
    triggered = collect_embeddings(tiny_session, tiny_data.test, attacker_hooks_active=True, hooks=[hook])
    clean = collect_embeddings(tiny_session, tiny_data.test)
    assert np.all(triggered.blocks[2] == 0)
    for i in (0, 1, 3):
        assert np.array_equal(triggered.blocks[i], clean.blocks[i])

    inactive = collect_embeddings(tiny_session, tiny_data.test, attacker_hooks_active=False, hooks=[hook])
    assert np.array_equal(inactive.concatenated, clean.concatenated)


def test_hook_sees_training_phase(tiny_session, tiny_data):
    hook = _ZeroEmbedding(0)
    train_vfl(tiny_session, tiny_data.train, epochs=1, hooks=[hook])
    assert hook.seen_phases == {TRAIN}


def test_hook_with_wrong_shape_is_rejected(tiny_session, tiny_data):
    with pytest.raises(ShapeError):
        collect_embeddings(tiny_session, tiny_data.test, attacker_hooks_active=True, hooks=[_BadShape()])


def test_identity_defense_matches_no_defense(tiny_session, tiny_data):
    train_vfl(tiny_session, tiny_data.train, epochs=2)
    assert np.array_equal(infer(tiny_session, tiny_data.test), infer(tiny_session, tiny_data.test, defense=identity_defense))


def test_defense_with_wrong_shape_is_rejected(tiny_session, tiny_data):
    with pytest.raises(ShapeError):
        infer(tiny_session, tiny_data.test, defense=lambda h: h[:, :4])


def test_participant_lr_scale(tiny_session):
    tiny_session.lr_scale[1] = 2.0
    assert tiny_session.participant_sgd(1).learning_rate == pytest.approx(0.2)
    assert tiny_session.participant_sgd(0).learning_rate == pytest.approx(0.1)
    tiny_session.reset_lr_scale()
    assert tiny_session.participant_sgd(1).learning_rate == pytest.approx(0.1)


def test_embedding_batch_concatenates_in_participant_order():
    batch = EmbeddingBatch(blocks=[np.ones((2, 2)), np.zeros((2, 2))], idx=np.arange(2))
    assert batch.concatenated.tolist() == [[1, 1, 0, 0], [1, 1, 0, 0]]


def test_session_checkpoint_roundtrip(tiny_session, tiny_data, tmp_path):
    train_vfl(tiny_session, tiny_data.train, epochs=1)
    save_session(tiny_session, tmp_path / "session", config_digest="abc")
    restored = load_session(tmp_path / "session")
    assert np.array_equal(infer(tiny_session, tiny_data.test), infer(restored, tiny_data.test))
    assert restored.n_participants == tiny_session.n_participants


def _small_session(tiny_data):
    widths = [tiny_data.spec.block_width(i) for i in range(4)]
    return create_session(widths, 4, 3, SgdConfig(0.1, 32), seed=9, bottom_layers=2, bottom_hidden=8, top_layers=2, top_hidden=8)


def test_resumed_session_matches_uninterrupted_training(tiny_data, tmp_path):
    uninterrupted = _small_session(tiny_data)
    train_vfl(uninterrupted, tiny_data.train, epochs=4)

    first_half = _small_session(tiny_data)
    train_vfl(first_half, tiny_data.train, epochs=2)
    save_session(first_half, tmp_path / "session")
    resumed = load_session(tmp_path / "session")
    assert resumed.epochs_trained == 2
    train_vfl(resumed, tiny_data.train, epochs=2)

    assert resumed.epochs_trained == uninterrupted.epochs_trained == 4
    for a, b in zip(uninterrupted.top_model.parameters(), resumed.top_model.parameters()):
        assert np.array_equal(a, b)
    for left, right in zip(uninterrupted.bottom_models, resumed.bottom_models):
        for a, b in zip(left.parameters(), right.parameters()):
            assert np.array_equal(a, b)


@pytest.mark.parametrize("key, value", [("embedding_dim", "four"), ("lr_scale", "1,oops,1,1"), ("rng_inc", "x")])
def test_corrupt_manifest_value_raises_artifact_error(tiny_session, tmp_path, key, value):
    directory = save_session(tiny_session, tmp_path / "session")
    manifest = directory / "manifest.txt"
    lines = [f"{key}={value}" if line.startswith(f"{key}=") else line for line in manifest.read_text(encoding="utf-8").splitlines()]
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(ArtifactError):
        load_session(directory)


@pytest.mark.parametrize("key", ["n_participants", "learning_rate", "seed"])
def test_manifest_missing_key_raises_artifact_error(tiny_session, tmp_path, key):
    directory = save_session(tiny_session, tmp_path / "session")
    manifest = directory / "manifest.txt"
    lines = [line for line in manifest.read_text(encoding="utf-8").splitlines() if not line.startswith(f"{key}=")]
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(ArtifactError):
        load_session(directory)


def test_corrupt_bottom_checkpoint_raises_artifact_error(tiny_session, tmp_path):
    directory = save_session(tiny_session, tmp_path / "session")
    (directory / "bottom_1.txt").write_text("mlp v1 2\nlayer 3 8 relu\n1 2 nan?\n", encoding="utf-8")
    with pytest.raises(ArtifactError):
        load_session(directory)
