import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")


def find_cifar_data():
    """Locate CIFAR-10 binary batches: $HVSADV_DATA, then ./data candidates.

    Returns a path usable by load_cifar10_path (file or directory), or None.
    """
    candidates = []
    env = os.environ.get("HVSADV_DATA")
    if env:
        candidates.append(Path(env))
    root = Path(__file__).resolve().parent.parent
    candidates += [
        root / "data" / "cifar-10-batches-bin",
        root / "data",
    ]
    for cand in candidates:
        if cand.is_file():
            return cand
        if cand.is_dir() and sorted(cand.glob("data_batch_*.bin")):
            return cand
    return None


@pytest.fixture
def rng():
    return np.random.default_rng(0)
