"""Shared fixtures: realistic coefficient sets from real camera fits.

The three cameras (A: good consumer optics, B and C: low-cost barrel-heavy
lenses) give fixture magnitudes for both two-coefficient families and the
piecewise triples.  Values are fitted constants, used here only as
realistic inputs; every expected output in the tests is computed
independently.
"""

import numpy as np
import pytest

# (k1, k2) for f(r) = 1 + k1 r^2 + k2 r^4
EVEN_FITS = {
    "cam_a": (-0.2286, 0.1905),
    "cam_b": (-0.3435, 0.1232),
    "cam_c": (-0.3554, 0.1633),
}

# (k1, k2) for f(r) = 1 + k1 r + k2 r^2
QUAD_FITS = {
    "cam_a": (-0.0215, -0.1566),
    "cam_b": (-0.1067, -0.1577),
    "cam_c": (-0.1192, -0.1365),
}

# (f1, d1, f2) piecewise triples for the same cameras
PW_FITS = {
    "cam_a": (0.9908, -0.0936, 0.9653),
    "cam_b": (0.9387, -0.2695, 0.8066),
    "cam_c": (0.9410, -0.2563, 0.8270),
}

# Realistic intrinsics (camera A)
CAM_A_INTRINSICS = dict(alpha=832.4860, beta=832.5157, gamma=0.2042, u0=303.9605, v0=206.5811)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
