import numpy as np
import pytest

from edgebot import preprocess, synth


@pytest.fixture(scope="session")
def flow_records():
    return synth.synthetic_records(1200, seed=3)


@pytest.fixture(scope="session")
def prepared(flow_records):
    return preprocess.prepare(flow_records, seed=7)


@pytest.fixture(scope="session")
def small_split():
    """Fast separable 15-feature dataset split for model tests."""
    ds = synth.synthetic_dataset(3000, seed=11)
    return preprocess.split(ds, seed=5)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
