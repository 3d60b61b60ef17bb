"""Hypothesis strategies shared by the test modules."""

import numpy as np
from hypothesis import strategies as st

angles = st.floats(min_value=0.0, max_value=2 * np.pi, allow_nan=False)
unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=4)


@st.composite
def disc_points(draw, radius=1.0):
    r = draw(st.floats(min_value=0.0, max_value=radius, allow_nan=False))
    return r * np.exp(1j * draw(angles))


@st.composite
def contractions2(draw):
    """A 2x2 matrix with singular values clamped to at most one."""
    rng = np.random.default_rng(draw(seeds))
    M = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    U, s, Vh = np.linalg.svd(M)
    s = np.minimum(s, draw(unit) * 1.5)
    return (U * np.minimum(s, 1.0)) @ Vh
