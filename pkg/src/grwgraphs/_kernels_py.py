"""Pure numpy stencil kernels.

Reference implementation of the compiled kernels in ``_kernels.pyx``. Both
evaluate the same floating point expressions in the same order, so results
agree to the last bit on IEEE hardware (the test suite allows 1e-13).

Fields are 2-d arrays indexed ``[i0, i1]``. Axis 1 is always periodic. Axis 0
is handled according to ``mode``:

``PERIODIC``  wrap-around (torus)
``ONESIDED``  one-sided second-order differences on the first and last rows
``POLE``      latitude rows of a sphere: the ghost row beyond each pole is the
              first/last row shifted by half a turn in longitude and multiplied
              by ``parity`` (+1 for quantities even under theta -> -theta,
              -1 for odd ones such as theta-components)
"""

import numpy as np

PERIODIC, ONESIDED, POLE = 0, 1, 2


def _ghosts(a, mode, parity):
    if mode == PERIODIC:
        return a[-1], a[0]
    half = a.shape[1] // 2
    lo = np.roll(a[0], -half)
    hi = np.roll(a[-1], -half)
    if parity < 0:
        lo, hi = -lo, -hi
    return lo, hi


def diff0(a, h, mode, parity=1):
    """Centered first derivative along axis 0."""
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    h2 = 2.0 * h
    out[1:-1] = (a[2:] - a[:-2]) / h2
    if mode == ONESIDED:
        out[0] = (-3.0 * a[0] + 4.0 * a[1] - a[2]) / h2
        out[-1] = (3.0 * a[-1] - 4.0 * a[-2] + a[-3]) / h2
    else:
        lo, hi = _ghosts(a, mode, parity)
        out[0] = (a[1] - lo) / h2
        out[-1] = (hi - a[-2]) / h2
    return out


def diff1(a, h):
    """Centered first derivative along the periodic axis 1."""
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    h2 = 2.0 * h
    out[:, 1:-1] = (a[:, 2:] - a[:, :-2]) / h2
    out[:, 0] = (a[:, 1] - a[:, -1]) / h2
    out[:, -1] = (a[:, 0] - a[:, -2]) / h2
    return out


def gradient(phi, i11, i12, i22, h0, h1, mode):
    """Contravariant gradient ``m^{ij} d_j phi`` of a scalar for inverse metric components."""
    d0 = diff0(phi, h0, mode, 1)
    d1 = diff1(phi, h1)
    return i11 * d0 + i12 * d1, i12 * d0 + i22 * d1


def divergence(v0, v1, sqrt_det, h0, h1, mode):
    """``(1/sqrt m) d_i (sqrt m V^i)``.

    Across a pole both ``sqrt m`` and ``V^0`` are odd, so the densitised flux
    ``sqrt m V^0`` is reflected with parity +1.
    """
    w0 = sqrt_det * v0
    w1 = sqrt_det * v1
    return (diff0(w0, h0, mode, 1) + diff1(w1, h1)) / sqrt_det
