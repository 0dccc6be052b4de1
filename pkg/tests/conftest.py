import numpy as np
import pytest

from hypercube.optable import full_split, make_modular, make_symmetric, split_cells
from hypercube.training import TrainConfig, train


@pytest.fixture(scope="session")
def s3():
    return make_symmetric(3)


@pytest.fixture(scope="session")
def c6():
    return make_modular("add", 6)


# representation-grade settings: regularize until tightly balanced, then fit to round-off
REP_SETTINGS = dict(scheduler_threshold=1e-7, stop_loss=1e-18)


def _trained(op, seed, **cfg):
    split = split_cells(op, 0.6, seed)
    return split, train(op, split, TrainConfig(seed=seed, **cfg))


@pytest.fixture(scope="session")
def s3_run(s3):
    """A converged hypercube run on S3 at 60% of the table."""
    split, res = _trained(s3, 0, **REP_SETTINGS)
    assert res.status == "converged"
    return split, res


@pytest.fixture(scope="session")
def c6_run(c6):
    split, res = _trained(c6, 0, **REP_SETTINGS)
    assert res.status == "converged"
    return split, res


@pytest.fixture(scope="session")
def sub6_run():
    """Subtraction mod 6 fit on the whole table."""
    op = make_modular("sub", 6)
    res = train(op, full_split(op), TrainConfig(lr=0.25, seed=0, **REP_SETTINGS))
    assert res.status == "converged"
    return op, res


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
