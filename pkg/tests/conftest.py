import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from structbath.network import NetworkSpec


def random_network(rng, n_nodes, j_max=0.6, j_sb_min=0.0, gamma=(1e-4, 5e-2),
                   density=0.6):
    """Random valid network: system ``S`` first, bath ``B1..``."""
    labels = ["S"] + [f"B{k}" for k in range(1, n_nodes)]
    omega = rng.uniform(5.8, 7.6, n_nodes)
    gam = np.concatenate([[0.0], rng.uniform(*gamma, n_nodes - 1)])
    edges = []
    for a, b in itertools.combinations(range(n_nodes), 2):
        if a == 0:
            mag = rng.uniform(j_sb_min, j_max) if rng.random() < density or b == 1 else 0.0
        elif rng.random() < density:
            mag = rng.uniform(0.0, j_max)
        else:
            continue
        if mag or a == 0:
            edges.append((labels[a], labels[b], mag * rng.choice([-1.0, 1.0])))
    return NetworkSpec(tuple(labels), tuple(omega), tuple(gam), tuple(edges), "S")


@st.composite
def networks(draw, min_nodes=2, max_nodes=8):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(min_nodes, max_nodes))
    return random_network(np.random.default_rng(seed), n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# criterion number -> (name, passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
