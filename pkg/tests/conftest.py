import numpy as np
import pytest

from uavsfl import optimizer
from uavsfl.scenario import Scenario, SystemParams, UserProfile, default_config, generate_scenario


def make_user(x=0.0, y=0.0, data_bits=5e6, cycles_per_bit=20.0, local_iters=4, **kw):
    base = dict(chip_coeff=1e-28, cpu_min_hz=1e8, cpu_max_hz=1e9, pmax_w=0.01)
    base.update(kw)
    return UserProfile(position=(x, y), data_bits=data_bits, cycles_per_bit=cycles_per_bit,
                       local_iters=local_iters, **base)


def make_scenario(*users, seed=0, **params):
    return Scenario(params=SystemParams(**params), users=tuple(users), seed=seed)


@pytest.fixture(scope="session")
def default_scenario():
    return generate_scenario(default_config(seed=7))


@pytest.fixture(scope="session")
def default_run(default_scenario):
    return optimizer.run(default_scenario)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines collected by test_acceptance and echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
