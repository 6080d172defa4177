import numpy as np
import pytest

from fdcell.geometry import ScenarioConfig, build_scenario, generate_scenario
from fdcell.link import default_cqi_table


@pytest.fixture(scope="session")
def table():
    return default_cqi_table()


@pytest.fixture(scope="session")
def scenario():
    return generate_scenario(ScenarioConfig(), seed=7)


@pytest.fixture(scope="session")
def small_scenario():
    return generate_scenario(ScenarioConfig(num_cues=2, num_d2d_links=1), seed=3)


@pytest.fixture(scope="session")
def hand_scenario():
    """FBS at (30, 25); DL CUE 10 m east, UL CUE 20 m south, a 2 m D2D link in the north-west."""
    return build_scenario(ScenarioConfig(num_cues=2, num_d2d_links=1), [[40, 25], [30, 5]], [[10, 40]], [[12, 40]])


def random_powers(rng, scenario, sel):
    return np.where(sel.active, rng.uniform(0, 1, 3) * scenario.p_max, 0.0)


CRITERIA: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda s: int(s.split("]")[0].split()[-1])):
            terminalreporter.write_line(line)
