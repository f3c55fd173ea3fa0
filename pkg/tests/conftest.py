import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from timepoint.cpab import build_prior  # noqa: E402
from timepoint.model import build_model  # noqa: E402


@pytest.fixture(scope="session")
def prior():
    return build_prior()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tiny_model():
    return build_model("tiny", seed=0).eval()
