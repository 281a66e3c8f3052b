import numpy as np
import pytest

from beliefrev import Evidence, build_network, load_evidence, load_network


def chain_network():
    return build_network({
        "name": "chain",
        "variables": [
            {"name": "a", "prior": 0.2},
            {"name": "b", "parents": ["a"], "cpt": [0.9, 0.1, 0.1, 0.9]},
        ],
    })


def two_parent_network(cpt=None, prior_u=0.3, prior_v=0.6):
    """U -> X <- V with a coupling table (XOR-like by default)."""
    if cpt is None:
        cpt = [0.9, 0.1, 0.2, 0.8, 0.3, 0.7, 0.85, 0.15]
    return build_network({
        "name": "collider",
        "variables": [
            {"name": "u", "prior": prior_u},
            {"name": "v", "prior": prior_v},
            {"name": "x", "parents": ["u", "v"], "cpt": cpt},
        ],
    })


@pytest.fixture
def chain():
    return chain_network()


@pytest.fixture
def collider():
    return two_parent_network()


@pytest.fixture(scope="session")
def sec4():
    return load_network("fig3-sec4.bn")


@pytest.fixture(scope="session")
def sec5():
    return load_network("fig3-sec5.bn")


@pytest.fixture(scope="session")
def symptoms(sec5):
    return load_evidence("fig3.ev", sec5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def no_evidence():
    return Evidence()


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number].line())
