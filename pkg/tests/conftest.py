from pathlib import Path

import numpy as np
import pytest

from gnnfpga import kernels
from gnnfpga.harness.dataset import load_dataset_csv

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    with kernels.use_backend(request.param):
        yield request.param


@pytest.fixture
def xor_data():
    return load_dataset_csv(FIXTURES / "xor.csv", 2, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
