import numpy as np
import pytest

from sampled_topk.core import GlobalRankSet, RankPmf


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_pmf(rng, n_items, concentration=1.0):
    return RankPmf.from_weights(rng.dirichlet(np.full(n_items, concentration)))


def random_population(rng, n_items, n_users, pmf=None):
    pmf = pmf if pmf is not None else random_pmf(rng, n_items)
    return GlobalRankSet(n_items, rng.choice(n_items, size=n_users, p=pmf.probs) + 1)


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
