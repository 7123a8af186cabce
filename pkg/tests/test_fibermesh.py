import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grwgraphs import _kernels_py, fibermesh as fm
from grwgraphs.fibermesh import Metric, MeshError, NotPositiveDefinite

from conftest import max_abs


def test_torus_area_exact(torus64):
    assert fm.integrate(torus64, 1.0) == pytest.approx(4 * math.pi**2, rel=1e-12)
    assert torus64.euler_characteristic == 0 and torus64.gauss_curvature == 0.0


def test_minimal_and_too_small_meshes():
    m = fm.build_torus(8, 8, 1.0, 1.0)
    assert m.shape == (8, 8) and m.h == (1 / 8, 1 / 8)
    with pytest.raises(MeshError):
        fm.build_torus(4, 4, 1.0, 1.0)
    with pytest.raises(MeshError):
        fm.build_sphere(4, 16)


def test_sphere_nodes_and_metric():
    m = fm.build_sphere(16, 32, r=2.0)
    assert m.x0[0] == pytest.approx(0.5 * math.pi / 16)
    assert np.all(m.K_fiber() == 0.25)
    th, _ = m.coords()
    assert np.allclose(m.metric.m22, 4.0 * np.sin(th) ** 2)


def test_sphere_area_and_gauss_bonnet(sphere64):
    area = fm.integrate(sphere64, 1.0)
    assert abs(area / (4 * math.pi) - 1) < 5e-3
    gb = fm.integrate(sphere64, sphere64.K_fiber())
    assert abs(gb / (2 * math.pi * sphere64.euler_characteristic) - 1) < 5e-3


def test_sin_integrates_to_zero(torus64):
    X, _ = torus64.coords()
    assert abs(fm.integrate(torus64, np.sin(X))) < 1e-12


def test_constant_field_derivatives_vanish(torus64, sphere64):
    for m in (torus64, sphere64):
        c = np.full(m.shape, 2.7)
        assert np.all(fm.gradient(m, c) == 0.0)
        assert np.all(fm.laplace_beltrami(m, c) == 0.0)
        assert np.all(fm.divergence(m, np.zeros((2,) + m.shape)) == 0.0)


def _errors(fn, sizes=(32, 64, 128)):
    out = []
    for n in sizes:
        m = fm.build_torus(n, n)
        X, Y = m.coords()
        out.append(fn(m, X, Y))
    return out


def _order(errs):
    return math.log2(errs[-2] / errs[-1])


def test_gradient_of_sin_is_cos():
    errs = _errors(lambda m, X, Y: max_abs(fm.gradient(m, np.sin(X))[0] - np.cos(X)))
    assert errs[-1] < 1e-3 and _order(errs) > 1.9


def test_divergence_of_sin_field():
    errs = _errors(lambda m, X, Y: max_abs(
        fm.divergence(m, np.stack([np.sin(X), np.zeros_like(X)])) - np.cos(X)))
    assert _order(errs) > 1.9


def test_laplacian_of_sin():
    errs = _errors(lambda m, X, Y: max_abs(fm.laplace_beltrami(m, np.sin(X)) + np.sin(X)))
    assert errs[-1] < 1e-3 and _order(errs) > 1.9


def test_scaled_metric_scales_gradient(torus64):
    X, _ = torus64.coords()
    g4 = torus64.metric.scaled(4.0)
    a = fm.gradient(torus64, np.sin(X), g4)
    b = fm.gradient(torus64, np.sin(X))
    assert max_abs(a - 0.25 * b) < 1e-15


def test_divergence_of_gradient_is_laplacian(sphere64):
    th, ph = sphere64.coords()
    phi = np.cos(th) + np.sin(th) * np.cos(ph)
    lb = fm.laplace_beltrami(sphere64, phi)
    composed = fm.divergence(sphere64, fm.gradient(sphere64, phi))
    assert max_abs(lb - composed) <= 1e-12


def test_sphere_eigenfunction():
    # cos(theta) is a degree-1 spherical harmonic: Lap = -2 cos(theta).
    errs = []
    for n in (32, 64, 128):
        m = fm.build_sphere(n, 2 * n)
        th, _ = m.coords()
        errs.append(max_abs(fm.laplace_beltrami(m, np.cos(th)) + 2 * np.cos(th)))
    assert errs[1] < 1e-2 and _order(errs) > 1.8


def test_onesided_pole_option():
    m = fm.build_sphere(64, 128, pole="onesided")
    th, _ = m.coords()
    err = fm.laplace_beltrami(m, np.cos(th)) + 2 * np.cos(th)
    interior = (th > math.pi / 8) & (th < 7 * math.pi / 8)
    assert max_abs(err[interior]) < 1e-2


def test_bad_metric_names_first_node(torus64):
    m11 = np.ones(torus64.shape)
    m11[3, 5] = -1.0
    bad = Metric(m11, 0.0, 1.0)
    with pytest.raises(NotPositiveDefinite, match=r"\(3, 5\)"):
        fm.gradient(torus64, np.zeros(torus64.shape), bad)


def test_brioschi_round_sphere_metric():
    errs = []
    for n in (32, 64, 128):
        m = fm.build_sphere(n, 2 * n)
        errs.append(max_abs(fm.gauss_curvature(m, m.metric) - 1.0))
    assert errs[1] < 5e-3 and _order(errs) > 1.9


def test_brioschi_conformal_flat_metric():
    # e^{2 phi} (dx^2 + dy^2) has K = -e^{-2 phi} Lap phi.
    errs = []
    for n in (32, 64, 128):
        m = fm.build_torus(n, n)
        X, Y = m.coords()
        phi = 0.3 * np.sin(X) * np.cos(2 * Y)
        w = np.exp(2 * phi)
        K = fm.gauss_curvature(m, Metric(w, 0.0 * w, w))
        exact = -np.exp(-2 * phi) * (-0.3 * 5 * np.sin(X) * np.cos(2 * Y))
        errs.append(max_abs(K - exact))
    assert _order(errs) > 1.8


def test_refine_resamples_analytic_fields(torus64):
    fine, vals, exact = fm.refine(torus64, lambda m: np.sin(m.coords()[0]))
    assert exact and fine.shape == (128, 128) and fine.h[0] == torus64.h[0] / 2
    assert np.array_equal(vals, np.sin(fine.coords()[0]))
    assert fm.integrate(fine, 1.0) == pytest.approx(fm.integrate(torus64, 1.0), rel=1e-12)


def test_refine_interpolates_arrays(torus64):
    X, Y = torus64.coords()
    fine, vals, exact = fm.refine(torus64, np.sin(X) * np.cos(Y))
    FX, FY = fine.coords()
    assert not exact
    assert max_abs(vals - np.sin(FX) * np.cos(FY)) < 5e-3


def test_discrete_divergence_theorem():
    # int psi div V + int <grad psi, V> -> 0 under refinement.
    errs = []
    for n in (32, 64, 128):
        m = fm.build_torus(n, n)
        X, Y = m.coords()
        psi = np.cos(X + 2 * Y) + np.sin(Y)
        V = np.stack([np.sin(X) * np.cos(Y), np.cos(3 * X)])
        errs.append(abs(fm.integrate(m, psi * fm.divergence(m, V))
                        + fm.integrate(m, fm.inner(m, fm.gradient(m, psi), V))))
    assert errs[-1] < 1e-10 or _order(errs) >= 1.8


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-10, 10), b=st.floats(-10, 10), seed=st.integers(0, 2**16))
def test_operators_are_linear(sphere64, a, b, seed):
    rng = np.random.default_rng(seed)
    m = fm.build_sphere(16, 32)
    phi, psi = rng.normal(size=(2,) + m.shape)
    for op in (fm.laplace_beltrami, fm.gradient):
        lhs = op(m, a * phi + b * psi)
        rhs = a * op(m, phi) + b * op(m, psi)
        assert max_abs(lhs - rhs) <= 1e-12 * max(1.0, max_abs(lhs)) * 100


def test_laplacian_matrix_matches_operator(torus64, sphere64):
    rng = np.random.default_rng(1)
    for m in (torus64, sphere64):
        phi = rng.normal(size=m.shape)
        L = fm.laplacian_matrix(m)
        lb = fm.laplace_beltrami(m, phi).ravel()
        assert max_abs(L @ phi.ravel() - lb) <= 1e-13 * max_abs(lb)


def test_field_exports(tmp_path):
    m = fm.build_torus(8, 8)
    X, _ = m.coords()
    text = fm.field_to_csv(m, np.sin(X), tmp_path / "f.csv")
    lines = text.strip().splitlines()
    assert lines[0] == "node,i0,i1,x0,x1,value" and len(lines) == 65
    assert (tmp_path / "f.csv").read_text() == text
    s = fm.field_summary(m, np.ones(m.shape))
    assert s["min"] == s["max"] == 1.0


@pytest.mark.parametrize("mode", [_kernels_py.PERIODIC, _kernels_py.ONESIDED, _kernels_py.POLE])
def test_backends_agree(mode):
    kernels = pytest.importorskip("grwgraphs._kernels")
    rng = np.random.default_rng(mode)
    a = rng.normal(size=(24, 32))
    i11, i12, i22 = rng.uniform(0.5, 2, size=(3, 24, 32))
    sq = rng.uniform(0.5, 2, size=(24, 1))
    for parity in (1.0, -1.0):
        assert max_abs(kernels.diff0(a, 0.1, mode, parity) - _kernels_py.diff0(a, 0.1, mode, parity)) <= 1e-13
    assert max_abs(kernels.diff1(a, 0.2) - _kernels_py.diff1(a, 0.2)) <= 1e-13
    for x, y in zip(kernels.gradient(a, i11, i12, i22, 0.1, 0.2, mode),
                    _kernels_py.gradient(a, i11, i12, i22, 0.1, 0.2, mode)):
        assert max_abs(x - y) <= 1e-13
    v0, v1 = rng.normal(size=(2, 24, 32))
    assert max_abs(kernels.divergence(v0, v1, sq, 0.1, 0.2, mode)
                   - _kernels_py.divergence(v0, v1, sq, 0.1, 0.2, mode)) <= 1e-13
