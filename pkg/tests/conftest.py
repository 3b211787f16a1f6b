import numpy as np
import pytest

from propforge import cfm, dataset, nn, surrogate
from propforge.config import NetTrainParams

# Small shared artifacts: big enough to exercise every code path, small
# enough that the non-acceptance suite stays fast.  The acceptance module
# trains its own desk-profile models.


@pytest.fixture(scope="session")
def tiny_dataset():
    return dataset.generate_dataset(120, seed=11)


@pytest.fixture(scope="session")
def tiny_split(tiny_dataset):
    return dataset.split(tiny_dataset, 90)


@pytest.fixture(scope="session")
def tiny_surrogates(tiny_split):
    train, _ = tiny_split
    params = NetTrainParams(hidden_layers=2, hidden_width=32,
                            epochs=200, batch_size=64)
    return surrogate.train_surrogates(train, params, seed=1)


@pytest.fixture(scope="session")
def tiny_cfm(tiny_split):
    train, _ = tiny_split
    params = NetTrainParams(hidden_layers=3, hidden_width=64,
                            epochs=400, batch_size=64)
    return cfm.train_cfm(train, params, seed=2)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def random_design(rng):
    from propforge.geometry import DesignVector
    return DesignVector(
        n_blades=int(rng.integers(2, 6)),
        P=rng.uniform(0.5, 1.5),
        w_rp=rng.uniform(0.5, 0.9),
        w_c=rng.uniform(0.5, 1.0),
        w_rc=rng.uniform(0.5, 0.8),
        camber=rng.uniform(0.0, 0.05),
    )
