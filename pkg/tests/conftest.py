import pytest

from trielab.exact_moments import compute_moment_table
from trielab.markov_source import MarkovChain


@pytest.fixture(scope="session")
def chain67():
    return MarkovChain(0.5, 0.6, 0.7)


@pytest.fixture(scope="session")
def table67(chain67):
    # shared across files; builds in well under a second
    return compute_moment_table(chain67, 8192)
