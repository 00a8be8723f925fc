import numpy as np
import pytest

from rrpo import ExplicitSet, Instance, ParamVector

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


def single(alpha, beta):
    return ParamVector([alpha], [beta], [[0.0]])


@pytest.fixture
def two_revenue_example():
    """R1 = p(10 - p), R2 = p(4 - 0.2p) on prices {5, 10}."""
    u1, u2 = single(10, 1), single(4, 0.2)
    return Instance("linear", [np.array([5.0, 10.0])], u1), ExplicitSet((u1, u2))


@pytest.fixture
def tie_example():
    """Three linear revenue curves on {5, 8, 9}; the robust price 8 has two worst cases."""
    u1 = single(10, 1)
    members = (u1, single(3, 0.1), single(3.6, 0.2))
    return Instance("linear", [np.array([5.0, 8.0, 9.0])], u1), ExplicitSet(members)


@pytest.fixture
def mixed_family_example():
    """Linear 10 - 2p and log-log 10 p^-2 on the grid 1.0000 .. 4.0000."""
    grid = np.round(np.linspace(1.0, 4.0, 30001), 4)
    u_lin = single(10.0, 2.0)
    u_log = single(np.log(10.0), 2.0)
    uset = ExplicitSet((u_lin, u_log), ("linear", "loglog"))
    return Instance("linear", [grid], u_lin), uset


def random_params(rng, family, n, ranges=None):
    ranges = ranges or {
        "linear": ((100, 200), (5, 15), (-0.1, 0.1)),
        "semilog": ((8, 10), (1.5, 2.0), (-0.5, 0.5)),
        "loglog": ((10, 14), (1.5, 2.0), (-0.8, 0.8)),
    }[family]
    (a0, a1), (b0, b1), (g0, g1) = ranges
    g = rng.uniform(g0, g1, (n, n))
    np.fill_diagonal(g, 0.0)
    return ParamVector(rng.uniform(a0, a1, n), rng.uniform(b0, b1, n), g)
