"""按名称派生互相独立的随机数流，保证同一种子下各阶段可复现且互不干扰"""
import hashlib

import numpy as np


def _stream_key(name: str) -> int:
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:4], "little")


def derive_rng(seed: int, name: str) -> np.random.Generator:
    """由整数种子和阶段名派生独立的 Generator"""
    return np.random.default_rng(np.random.SeedSequence([int(seed), _stream_key(name)]))


def derive_seed(seed: int, name: str) -> int:
    """派生一个整数子种子（用于需要 int 种子的接口，如 mlp_init）"""
    return int(derive_rng(seed, name).integers(0, 2**31 - 1))
