from __future__ import annotations

import pytest

from chaseproof.corpus import example_one, nonterminating_example
from chaseproof.syntax import reset_fresh_counter


@pytest.fixture(autouse=True)
def _fresh_names():
    """Each test starts with a pristine fresh-name supply."""
    reset_fresh_counter()
    yield


@pytest.fixture
def ex1():
    return example_one()


@pytest.fixture
def nonterm():
    return nonterminating_example()
