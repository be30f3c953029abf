"""Sub-seed derivation: every random stream is keyed by (master seed, stage, index)."""

import hashlib

import numpy as np


def derive_seed(master: int, stage: str, index: int = 0) -> int:
    digest = hashlib.sha256(f"{int(master)}:{stage}:{int(index)}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def frame_rng(master: int, stage: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, stage, index))
