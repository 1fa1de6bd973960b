from datetime import timedelta

import hypothesis.strategies as st
import numpy as np
from hypothesis import settings

settings.register_profile("default", max_examples=50, deadline=timedelta(seconds=20))
settings.load_profile("default")


@st.composite
def probability_values(draw, min_classes=2, max_classes=10):
    """Normalized probability tuples (sum to 1 within float error)."""
    c = draw(st.integers(min_value=min_classes, max_value=max_classes))
    raw = draw(
        st.lists(
            st.floats(min_value=1e-6, max_value=1.0, allow_nan=False),
            min_size=c,
            max_size=c,
        )
    )
    total = sum(raw)
    return tuple(v / total for v in raw)


def random_probability_matrix(rng: np.random.Generator, n: int, c: int) -> np.ndarray:
    """Dirichlet(1) rows; each row sums to 1 within float error."""
    raw = rng.dirichlet(np.ones(c), size=n)
    return raw / raw.sum(axis=1, keepdims=True)
