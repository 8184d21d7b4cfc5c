import math
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from wconc.qstate import WCoefficients

REF_ALPHAS = (0.5, 0.5, 0.5, 0.3, 0.4)


@pytest.fixture
def ref_coeffs():
    return WCoefficients(REF_ALPHAS)


def random_coeffs(rng, n, complex_phases=False):
    mods = rng.uniform(0.05, 1.0, n)
    if complex_phases:
        return WCoefficients.normalized(mods * np.exp(1j * rng.uniform(0, 2 * np.pi, n)))
    return WCoefficients.normalized(mods)


@st.composite
def w_coefficients(draw, n_min=2, n_max=6, complex_phases=False):
    n = draw(st.integers(n_min, n_max))
    mods = draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n))
    if complex_phases:
        phases = draw(st.lists(st.floats(0, 2 * math.pi), min_size=n, max_size=n))
        vals = [m * complex(math.cos(p), math.sin(p)) for m, p in zip(mods, phases)]
    else:
        vals = mods
    return WCoefficients.normalized(vals)
