"""
会话检查点：目录内每个模型一个 nn 文本检查点，外加 key=value 清单

    manifest.txt   n_participants / embedding_dim / n_classes / lr_scale / seed / learning_rate / batch_size
                   epochs_trained / rng_*（批次顺序随机流的状态，续训时批次顺序与不中断的训练一致）
    bottom_<i>.txt
    top.txt
"""
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np

from src.nn.checkpoint import load_mlp, save_mlp
from src.nn.mlp import SgdConfig
from src.utils.errors import ArtifactError, parsing_artifact
from src.utils.kv_format import parse_vector, read_kv, write_kv
from src.utils.logger import logger
from src.vfl.session import VflSession

MANIFEST = "manifest.txt"


def rng_state_entries(rng: np.random.Generator) -> Dict[str, object]:
    state = rng.bit_generator.state
    if state.get("bit_generator") != "PCG64":
        raise ArtifactError(f"不支持保存 {state.get('bit_generator')} 随机流状态")
    return {
        "rng_state": state["state"]["state"],
        "rng_inc": state["state"]["inc"],
        "rng_has_uint32": state["has_uint32"],
        "rng_uinteger": state["uinteger"],
    }


def restore_rng_state(session: VflSession, manifest: Dict[str, str]):
    # 旧清单没有随机流状态时保留按种子派生的初始流
    if "rng_state" not in manifest:
        return
    session.rng.bit_generator.state = {
        "bit_generator": "PCG64",
        "state": {"state": int(manifest["rng_state"]), "inc": int(manifest["rng_inc"])},
        "has_uint32": int(manifest["rng_has_uint32"]),
        "uinteger": int(manifest["rng_uinteger"]),
    }


def save_session(session: VflSession, directory: Union[str, Path], config_digest: Optional[str] = None) -> Path:
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    for i, model in enumerate(session.bottom_models):
        save_mlp(model, target / f"bottom_{i}.txt")
    save_mlp(session.top_model, target / "top.txt")
    manifest = {
        "n_participants": session.n_participants,
        "embedding_dim": session.embedding_dim,
        "n_classes": session.n_classes,
        "lr_scale": session.lr_scale,
        "seed": session.seed,
        "learning_rate": session.sgd.learning_rate,
        "batch_size": session.sgd.batch_size,
        "epochs_trained": session.epochs_trained,
    }
    manifest.update(rng_state_entries(session.rng))
    if config_digest:
        manifest["config_digest"] = config_digest
    write_kv(target / MANIFEST, manifest)
    logger.info(f"会话检查点已保存到 {target}")
    return target


def load_session(directory: Union[str, Path]) -> VflSession:
    source = Path(directory)
    manifest = read_kv(source / MANIFEST)
    with parsing_artifact(source / MANIFEST):
        n_participants = int(manifest["n_participants"])
        session = VflSession(
            bottom_models=[load_mlp(source / f"bottom_{i}.txt") for i in range(n_participants)],
            top_model=load_mlp(source / "top.txt"),
            sgd=SgdConfig(learning_rate=float(manifest["learning_rate"]), batch_size=int(manifest["batch_size"])),
            embedding_dim=int(manifest["embedding_dim"]),
            n_classes=int(manifest["n_classes"]),
            seed=int(manifest["seed"]),
            lr_scale=parse_vector(manifest["lr_scale"]),
            epochs_trained=int(manifest.get("epochs_trained", 0)),
        )
        restore_rng_state(session, manifest)
    logger.info(f"已从 {source} 加载会话检查点（已训练 {session.epochs_trained} 轮）")
    return session
