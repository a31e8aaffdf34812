from pathlib import Path

import numpy as np
import pytest

from rankforge.core.data import generate_synthetic_ranking_data, parse_letor

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def mini_letor_path() -> Path:
    return FIXTURES / "mini_letor.txt"


@pytest.fixture
def mini_dataset(mini_letor_path):
    return parse_letor(mini_letor_path)


@pytest.fixture
def synthetic_dataset():
    return generate_synthetic_ranking_data(n_queries=20, m=8, d=5, seed=3)
