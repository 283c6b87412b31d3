import numpy as np
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False, allow_infinity=False)
coeff = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def points(dim: int, min_size: int = 1, max_size: int = 12):
    return st.integers(min_size, max_size).flatmap(
        lambda p: hnp.arrays(np.float64, (p, dim), elements=unit)
    )


def vectors(size: int):
    return hnp.arrays(np.float64, (size,), elements=coeff)


def separated_points(min_size: int = 1, max_size: int = 8, gap: float = 1e-2):
    """Sorted 1-D points in (0, 1] at least ``gap`` apart."""
    return st.lists(
        st.integers(min_value=1, max_value=int(1 / gap)), min_size=min_size, max_size=max_size, unique=True
    ).map(lambda ks: (np.array(sorted(ks), dtype=np.float64) * gap).reshape(-1, 1))
