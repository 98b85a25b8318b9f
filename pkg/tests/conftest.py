import numpy as np
import pytest
from hypothesis import settings, strategies as st

from groupchar.groups import FiniteAbelianGroup

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@st.composite
def groups(draw, max_order=64, max_factors=3):
    orders = draw(st.lists(st.integers(1, 8), min_size=1, max_size=max_factors))
    while np.prod(orders) > max_order:
        orders = orders[:-1] or [2]
    return FiniteAbelianGroup(tuple(orders))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
