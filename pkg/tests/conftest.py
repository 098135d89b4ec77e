import math
from fractions import Fraction as F

import pytest

from bellscope.classical_rep import ConditionalRep
from bellscope.probspace import FiniteProbSpace
from bellscope.scenario import CorrelationVector, clauser_horne_scenario, two_event_scenario


def vec(singles, pairs, scenario=None, mode=None):
    scenario = scenario or two_event_scenario()
    return CorrelationVector.from_values(scenario, singles, pairs, mode)


@pytest.fixture
def inside_vector():
    return vec(["2/5", "2/5"], ["1/5"])


@pytest.fixture
def outside_vector():
    return vec(["2/3", "2/3"], ["1/5"])


@pytest.fixture
def ch_scenario():
    return clauser_horne_scenario()


def signaling_table():
    """Six atoms over A1, A2, a1, a2; primes mark complements."""
    rows = {
        "A1A2a1a2": (F(1, 25), {"A1", "A2", "a1", "a2"}),
        "A1'A2'a1a2": (F(4, 25), {"a1", "a2"}),
        "A1'A2a1'a2": (F(9, 25), {"A2", "a2"}),
        "A1A2'a1a2'": (F(9, 25), {"A1", "a1"}),
        "A1'A2'a1'a2": (F(1, 25), {"a2"}),
        "A1'A2'a1a2'": (F(1, 25), {"a1"}),
    }
    weights = {label: w for label, (w, _) in rows.items()}
    events = {name: [label for label, (_, m) in rows.items() if name in m] for name in ("A1", "A2", "a1", "a2")}
    space = FiniteProbSpace.build(weights, events)
    return ConditionalRep.standard(two_event_scenario(), space)


@pytest.fixture
def signaling_rep():
    return signaling_table()


def indeterministic_components():
    """Independence vectors sharing the vertex coefficients of (2/5,2/5;1/5)."""
    r5 = math.sqrt(5)
    raw = {
        (1, 1): (0.25, 1 / 16),
        (1, 0): ((3 + r5) / 8, (7 + 3 * r5) / 32),
        (0, 1): ((3 - r5) / 8, (7 - 3 * r5) / 32),
        (0, 0): (0.5, 0.25),
    }
    return {eps: vec([a, a], [b], mode="float") for eps, (a, b) in raw.items()}


SHARED_WEIGHTS = {(1, 1): 0.2, (1, 0): 0.2, (0, 1): 0.2, (0, 0): 0.4}


@pytest.fixture
def components():
    return indeterministic_components()


def diagonal_model(rng, n=4, pairs=((1, 3), (1, 4), (2, 3), (2, 4)), cells=3, grouping=None):
    """Commuting model on basis states (k, omega): weight c_k prod Bern(omega_i; q_ki).

    The cells k screen off every pair by construction. ``grouping[k]`` names
    the partition element that cell k is merged into; merging distinct cells
    generally breaks screening.
    Returns (rho, events, partition, pairs) with everything diagonal.
    """
    import itertools

    import numpy as np

    from bellscope.quantum import DensityOperator, ProjectionEvent

    c = rng.dirichlet(np.ones(cells))
    q = rng.uniform(0.05, 0.95, size=(cells, n))
    labels = [(k, w) for k in range(cells) for w in itertools.product((0, 1), repeat=n)]
    weights = np.array([
        c[k] * np.prod([q[k, i] if w[i] else 1 - q[k, i] for i in range(n)]) for k, w in labels
    ])
    rho = DensityOperator(np.diag(weights / weights.sum()))
    events = [ProjectionEvent(np.diag([float(w[i]) for _, w in labels])) for i in range(n)]
    grouping = list(range(cells)) if grouping is None else list(grouping)
    partition = [
        ProjectionEvent(np.diag([float(grouping[k] == g) for k, _ in labels]))
        for g in sorted(set(grouping))
    ]
    return rho, events, partition, pairs


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
