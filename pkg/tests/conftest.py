import numpy as np
import pytest

from grwgraphs import fibermesh as fm
from grwgraphs import warp

# (warping function, a height inside its domain) for every family.
FAMILY_CASES = [
    (warp.Constant(1.0), 0.3),
    (warp.Constant(2.5), -1.0),
    (warp.Exponential(), 0.2),
    (warp.Cosh(), 0.4),
    (warp.PowerLaw(1.0), 2.0),
    (warp.PowerLaw(2.0), 1.5),
    (warp.Affine(2.0, 1.0), 0.5),
]


@pytest.fixture(scope="session")
def torus64():
    return fm.build_torus(64, 64)


@pytest.fixture(scope="session")
def sphere64():
    return fm.build_sphere(64, 128)


def max_abs(a):
    return float(np.max(np.abs(a)))
