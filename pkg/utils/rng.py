"""Named random streams derived from the single run seed."""
import hashlib

import numpy as np


def derive_seed(master_seed: int, *names) -> int:
    """Stable 64-bit seed for the stream identified by `names` under `master_seed`."""
    label = "/".join(str(n) for n in names)
    digest = hashlib.sha256(f"{int(master_seed)}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(master_seed: int, *names) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, *names)))


def spawn(rng: np.random.Generator, *names) -> np.random.Generator:
    """Child stream of an existing generator, keyed by `names`."""
    base = int(rng.integers(0, 2**63 - 1))
    return make_rng(base, *names)
