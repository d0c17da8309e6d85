import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from relayrank.simulator import paper_like_config, simulate_race


@pytest.fixture(scope="session")
def full_race():
    return simulate_race(paper_like_config(11))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
