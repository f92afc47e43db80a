import sys

import pytest

# attributedict runs rootpath.append() on import, which appends None to sys.path when the
# cwd has no .git/requirements.txt ancestor; import it once here and drop the bogus entry so
# later importlib.metadata scans (torch, hypothesis) don't crash.
import attributedict.collections  # noqa: F401

sys.path[:] = [p for p in sys.path if p is not None]

from advchase.arena.config import ArenaConfig
from advchase.train.schedule import TrainSchedule


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run desk-scale training tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def tiny_arena():
    return ArenaConfig(max_steps=60)


@pytest.fixture
def tiny_schedule():
    return TrainSchedule(generations=2, adversaries_per_generation=2, chaser_iterations=(2, 3),
                         escapee_iterations=2, population=4, rollouts_per_fitness=2, hidden_dims=(4,),
                         probe_every=1, probe_episodes=2, seed=7)
