from pathlib import Path

import pytest

from folbench.nl.backends import OfflineBackend
from folbench.pipeline import GenerationConfig, generate_dataset

FIXTURES = Path(__file__).parent / "fixtures"
SEED = 2024


@pytest.fixture(scope="session")
def golden_path():
    return FIXTURES / "golden.jsonl"


@pytest.fixture(scope="session")
def generated():
    """300 offline instances, 100 per tier, shared by the heavier tests."""
    insts, stats = generate_dataset(GenerationConfig(seed=SEED, count=100), OfflineBackend(seed=SEED))
    return insts


@pytest.fixture(scope="session")
def small_generated():
    insts, _ = generate_dataset(GenerationConfig(seed=11, count=4), OfflineBackend(seed=11))
    return insts
