import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def table1():
    from mstnlearn.scenario_io import load_table1

    return load_table1()


@pytest.fixture(scope="session")
def scenario1():
    from mstnlearn.scenario_io import fixture_path, load_scenario

    return load_scenario(fixture_path("scenario1.json"))


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT compilation once so timed checks measure computation only."""
    from mstnlearn import rnn
    from mstnlearn.frequency import transition_matrix_from_net

    topo = rnn.Topology.mstn(2)
    net = rnn.NetWeights(topo, np.zeros(len(topo.connections)))
    seq = rnn.make_sequence([(np.zeros(9), 0, 1)])
    rnn.bptt_gradients(net, seq)
    transition_matrix_from_net(net)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
