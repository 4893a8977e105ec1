from __future__ import annotations

import numpy as np
import pytest

from fedsim.params import ParamVector


@pytest.fixture
def vec():
    """Build a single-segment ParamVector from any 1-D float sequence."""
    def make(values, name="w"):
        arr = np.asarray(values, dtype=np.float64).reshape(-1)
        return ParamVector(arr, ((name, (arr.size,)),))
    return make
