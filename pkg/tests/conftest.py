import numpy as np
import pytest

from dclkr.core.datagen import TaskSpec, make_rng, sample_task
from dclkr.core.dataset import PartyDataset
from dclkr.core.kernels import KernelSpec, KernelVariant


@pytest.fixture
def min_kernel() -> KernelSpec:
    return KernelSpec(KernelVariant.MIN)


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(1234)


@pytest.fixture
def toy1d_party(rng) -> PartyDataset:
    return sample_task(TaskSpec("toy1d"), 40, rng)


@pytest.fixture
def toy1d_parties(rng) -> list[PartyDataset]:
    task = TaskSpec("toy1d")
    return [sample_task(task, n, rng) for n in (12, 20, 8)]


@pytest.fixture
def public_grid() -> np.ndarray:
    return np.linspace(0.05, 1.0, 15).reshape(-1, 1)
