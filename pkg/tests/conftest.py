import random

import pytest

from mmnet.values import standard_domain


def pytest_addoption(parser):
    parser.addoption("--seed", type=int, default=20250809,
                     help="seed for randomized property tests")


@pytest.fixture
def seed(request):
    s = request.config.getoption("--seed")
    print(f"[seed={s}]")
    return s


@pytest.fixture
def rng(seed):
    return random.Random(seed)


@pytest.fixture(scope="session")
def domain():
    return standard_domain()
