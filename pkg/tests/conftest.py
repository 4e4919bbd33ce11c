import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def graph_ok(net):
    """Structural invariants every growing network keeps between steps."""
    ids = set(net.ids)
    assert len(net.ids) >= 2
    assert len(net.weights) == len(net.ids) == len(net.label_counts)
    for (a, b), age in net.edges.items():
        assert a < b and a in ids and b in ids
        assert 0 <= age <= net.params.max_edge_age
    for n, nbs in net.neighbors.items():
        assert n not in nbs
        for m in nbs:
            assert (min(n, m), max(n, m)) in net.edges
    assert sum(len(v) for v in net.neighbors.values()) == 2 * len(net.edges)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
