"""Seed derivation: every stage seed is a pure function of the global seed.

Stage names are hashed together with the global seed so that unset per-stage
seeds are reproducible across runs and independent across stages.
"""

import hashlib


def derive_seed(global_seed: int, stage: str) -> int:
    digest = hashlib.blake2b(digest_size=8)
    digest.update(global_seed.to_bytes(8, "little", signed=True))
    digest.update(stage.encode("utf-8"))
    return int.from_bytes(digest.digest(), "little") & 0x7FFF_FFFF_FFFF_FFFF
