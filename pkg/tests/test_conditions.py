import itertools
import json

import numpy as np
import pytest

from grwgraphs import conditions as cond, fibermesh as fm, warp
from grwgraphs.conditions import Verdict
from grwgraphs.experiments import SingleMode
from grwgraphs.graphgeom import SpacelikeGraph
from grwgraphs.warp import IntervalSpec

from conftest import FAMILY_CASES


def test_ncc_examples():
    assert cond.ncc_margin(warp.Exponential(), 0.0).margin == 0.0
    v = cond.ncc_margin(warp.Cosh(), 1.0)
    assert v.holds and v.margin == 0.0
    v = cond.ncc_margin(warp.Exponential(), -1.0)
    assert not v.holds and v.margin < 0


def test_tcc_examples():
    v = cond.tcc_check(warp.Constant(1.0), 0.0)
    assert v.holds and v.margin == 0.0
    assert not cond.tcc_check(warp.Exponential(), 0.0).holds
    v = cond.tcc_check(warp.Affine(1.0, 0.0), 0.0, IntervalSpec(0, "inf"))
    assert v.holds and v.details["min_fiber_ricci_margin"] == 1.0


def test_ubiquitous_examples():
    v = cond.ubiquitous_check(warp.Constant(1.0), 1.0)
    assert not v.holds and v.margin == 0.0
    v = cond.ubiquitous_check(warp.Cosh(), 1.0)
    assert not v.holds and not v.details["f_second_negative"]
    assert v.details["sampled"]
    with pytest.raises(ValueError):
        cond.ubiquitous_check(warp.Cosh(), 1.0, directions=4)


def test_ubiquitous_holds_for_concave_warping():
    # f = t on ]0, inf[ has f'' = 0: the condition fails along d/dt.
    assert not cond.ubiquitous_check(warp.Affine(1.0, 0.0), 1.0).holds
    # f = sqrt(t): f'' < 0 and the fiber is positively curved.
    v = cond.ubiquitous_check(warp.PowerLaw(0.5), 1.0, IntervalSpec(0.5, 4))
    assert v.holds and v.details["f_second_negative"]


def test_ricci_timelike_limits():
    wf, t = warp.PowerLaw(0.5), np.array([1.0, 2.0])
    Kf = 1.0
    # s = 0 gives Ric(d/dt, d/dt) = -2 f''/f.
    assert np.allclose(cond.ricci_timelike(wf, Kf, t, 0.0), -2 * wf.d2f(t) / wf.f(t))
    # Large s: Ric(Z, Z)/sinh^2 s tends to the null quantity Kf/f^2 - (log f)''.
    s = 20.0
    lim = cond.ricci_timelike(wf, Kf, t, s) / np.sinh(s) ** 2
    assert np.allclose(lim, Kf / wf.f(t) ** 2 - wf.d2logf(t), rtol=1e-12)


def test_inequality_classification(torus64, sphere64):
    for mesh in (torus64, sphere64):
        for wf, t0 in FAMILY_CASES:
            cls = cond.inequality_classify(SpacelikeGraph(wf, mesh, t0))
            assert np.max(np.abs(cls.residual)) <= 1e-10
            assert cls.verdict is Verdict.SATISFIES_TILDE
    X, _ = torus64.coords()
    cls = cond.inequality_classify(SpacelikeGraph(warp.Exponential(), torus64, 0.3 * np.sin(X)))
    assert cls.max_residual > 0 and cls.verdict is Verdict.VIOLATES
    assert cls.to_dict()["verdict"] == "Violates"


def test_strict_verdict(torus64):
    # A maximal graph (H = 0) in a spacetime where f'/f never vanishes.
    g = SpacelikeGraph(warp.Exponential(), torus64, 0.0)
    g.__dict__["H"] = np.zeros(torus64.shape)
    assert cond.inequality_classify(g).verdict is Verdict.SATISFIES_STRICT


def test_constant_curvature():
    r = cond.constant_curvature_classify(warp.Cosh(), 1.0)
    assert r.is_constant and r.cbar == pytest.approx(1.0, abs=1e-10)
    r = cond.constant_curvature_classify(warp.Exponential(), 0.0)
    assert r.is_constant and r.cbar == pytest.approx(1.0, abs=1e-10)
    r = cond.constant_curvature_classify(warp.Constant(1.0), 0.0)
    assert r.is_constant and r.cbar == 0.0 and "not applicable" in r.sign_note
    r = cond.constant_curvature_classify(warp.PowerLaw(1.0), 0.0, IntervalSpec(1, 4))
    assert not r.is_constant and r.cbar is None
    # Milne-type model f = t with a hyperbolic fiber: flat, and c < 0.
    r = cond.constant_curvature_classify(warp.Affine(1.0, 0.0), -1.0, IntervalSpec(0.5, 4))
    assert r.is_constant and r.cbar == 0.0 and r.sign_note.startswith("consistent")


PRESET_MATRIX = [
    (warp.Constant(1.0), None),
    (warp.Exponential(), None),
    (warp.Cosh(), None),
    (warp.PowerLaw(1.0), IntervalSpec(1, 4)),
    (warp.PowerLaw(0.5), IntervalSpec(0.5, 4)),
    (warp.PowerLaw(2.0), IntervalSpec(0.5, 4)),
    (warp.Affine(1.0, 0.0), IntervalSpec(0.5, 4)),
]


@pytest.mark.parametrize("wf,window", PRESET_MATRIX)
@pytest.mark.parametrize("Kf", [-1.0, 0.0, 0.25, 1.0])
def test_implications(wf, window, Kf):
    verdicts = cond.all_conditions(wf, Kf, window)
    assert cond.implication_failures(verdicts, Kf) == []


def test_implication_failures_detects_inconsistency():
    v = {name: cond.ConditionVerdict(name, hold, 0.0, {}) for name, hold in
         [("NCC", False), ("TCC", True), ("Ubiquitous", True), ("LogConcavity", True)]}
    assert len(cond.implication_failures(v, 1.0)) == 2
    v["TCC"] = cond.ConditionVerdict("TCC", False, -1.0, {})
    assert "Ubiquitous holds but TCC fails" in cond.implication_failures(v, 1.0)


def test_verdict_json_shape():
    d = cond.ncc_margin(warp.Exponential(), 0.0).to_dict()
    assert json.loads(json.dumps(d)).keys() >= {"condition", "holds", "margin", "worst"}
