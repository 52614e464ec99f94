"""Shared test setup.

Pin BLAS thread pools to one thread before numpy is first imported so
every floating-point reduction happens in a fixed order; the determinism
tests (byte-identical checkpoints) rely on this.
"""

import os

for _var in (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
):
    os.environ.setdefault(_var, "1")

import numpy as np  # noqa: E402
import pytest  # noqa: E402


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
