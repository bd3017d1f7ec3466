import pytest

from dispatchsim.cli import _read_scenario_text
from dispatchsim.scenario import load_scenario


def bundled(name):
    return load_scenario(_read_scenario_text(name))


@pytest.fixture
def table6_config():
    return bundled("table6_demo.scn")


@pytest.fixture
def paper_config():
    return bundled("paper_tables.scn")


@pytest.fixture
def sweep_config():
    return bundled("sweep_demo.scn")


@pytest.fixture
def migration_config():
    return bundled("migration_demo.scn")


TABLE6_JOBS = [(1, 0.0, 8.0), (2, 1.0, 4.0), (3, 3.0, 6.0), (4, 5.0, 2.0), (5, 6.0, 5.0)]
TABLE6_ORDER = [1, 4, 2, 5, 3]
TABLE6_WAITS = {1: 0.0, 4: 3.0, 2: 9.0, 5: 8.0, 3: 16.0}
