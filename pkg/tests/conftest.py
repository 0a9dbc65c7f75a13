import numpy as np
import pytest

from anorank import autoencoder as ae
from anorank.binvec import BinaryMatrix

# 3x5 worked-example matrix used throughout the unit tests:
# row 0 activates features 0,2,3; row 1: 1,2,3; row 2: 0,1,2.
EXAMPLE_ROWS = [
    [1, 0, 1, 1, 0],
    [0, 1, 1, 1, 0],
    [1, 1, 1, 0, 0],
]


@pytest.fixture()
def example_matrix() -> BinaryMatrix:
    return BinaryMatrix.from_dense(np.array(EXAMPLE_ROWS, dtype=np.uint8))


def finite_diff_grads(params, x, step=1e-5):
    """Independent oracle: central finite differences of the mean loss."""
    grads = {}
    for name, arr in params.named_arrays():
        g = np.zeros_like(arr)
        flat, gflat = arr.ravel(), g.ravel()
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + step
            up = ae.mean_loss(params, x)
            flat[idx] = orig - step
            down = ae.mean_loss(params, x)
            flat[idx] = orig
            gflat[idx] = (up - down) / (2 * step)
        grads[name] = g
    return grads


def max_rel_error(analytic, numeric):
    worst = 0.0
    for name, a in analytic.items():
        n = numeric[name]
        # the 1e-6 floor guards the division where the true derivative vanishes
        rel = np.abs(a - n) / np.maximum.reduce([np.abs(a), np.abs(n), np.full_like(a, 1e-6)])
        worst = max(worst, float(rel.max()))
    return worst
