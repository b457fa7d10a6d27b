"""拆分式纵向联邦学习协议"""
from .session import EmbeddingBatch, EmbeddingStore, GradientBatch, VflSession, create_session
from .hooks import INFER, TRAIN, Defense, VflHook, identity_defense
from .protocol import EpochStats, collect_embeddings, infer, server_step, top_logits, train_vfl

__all__ = [
    "EmbeddingBatch", "EmbeddingStore", "GradientBatch", "VflSession", "create_session",
    "INFER", "TRAIN", "Defense", "VflHook", "identity_defense",
    "EpochStats", "collect_embeddings", "infer", "server_step", "top_logits", "train_vfl",
]
