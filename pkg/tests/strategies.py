"""Hypothesis strategies shared by the test modules."""

import numpy as np
from hypothesis import strategies as st

from geoapprox.pmf import Pmf


def weights(min_size=1, max_size=12):
    return st.lists(st.floats(0.01, 1.0), min_size=min_size, max_size=max_size)


@st.composite
def pmfs(draw, lo=None, min_size=1, max_size=12):
    w = np.array(draw(weights(min_size, max_size)))
    offset = draw(st.integers(-5, 5)) if lo is None else lo
    return Pmf(offset, w / w.sum())


def positive_pmfs(**kw):
    return pmfs(lo=1, **kw)


def nonneg_pmfs(max_size=12):
    """Laws on ``0, 1, ...`` with ``P(0) > 0`` and positive mean."""
    return pmfs(lo=0, min_size=2, max_size=max_size)
