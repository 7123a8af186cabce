import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grwgraphs import warp
from grwgraphs.warp import DomainError, IntervalSpec

from conftest import FAMILY_CASES


def test_cosh_at_zero():
    v = warp.Cosh().eval(0.0)
    assert (v.f, v.f_prime, v.f_second, v.logf_second) == (1.0, 0.0, 1.0, 1.0)


def test_exponential_is_log_affine():
    t = np.linspace(-3, 3, 7)
    assert np.all(warp.Exponential().d2logf(t) == 0.0)


def test_powerlaw_values():
    v = warp.PowerLaw(1.0).eval(2.0)
    assert v.f == 2.0 and v.f_prime == 1.0
    assert v.logf_second == -0.25
    assert warp.PowerLaw(1.0).ratio(2.0) ** 2 == 0.25


def test_primitive_constants():
    assert warp.Exponential().primitive(0.0) == 0.0
    assert warp.Cosh().primitive(0.0) == 0.0
    assert warp.PowerLaw(3.0).primitive(1.0) == 0.0
    assert warp.PowerLaw(-1.0).primitive(1.0) == 0.0


def test_domain_violation_names_t_and_interval():
    with pytest.raises(DomainError, match=r"-1\.0.*\]0"):
        warp.PowerLaw(1.0).f(-1.0)
    with pytest.raises(DomainError):
        warp.PowerLaw(1.0).eval(np.array([1.0, 0.0]))


def test_affine_domain_restricted_to_positive_values():
    wf = warp.Affine(2.0, 1.0)
    assert wf.domain.lower == -0.5 and wf.domain.upper == math.inf
    assert warp.Affine(-1.0, 1.0).domain.upper == 1.0
    with pytest.raises(ValueError):
        warp.Affine(0.0, -1.0)


def test_domain_accepts_plain_sequences():
    wf = warp.Affine(1.0, 0.0, (0, "inf"))
    assert wf.domain == IntervalSpec(0.0, math.inf)
    assert warp.Exponential(domain=[-1, 1]).domain == IntervalSpec(-1.0, 1.0)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        warp.Constant(0.0)
    with pytest.raises(ValueError):
        warp.PowerLaw(1.0, IntervalSpec(-1.0, 1.0))


@pytest.mark.parametrize("wf,t0", FAMILY_CASES)
def test_config_round_trip(wf, t0):
    again = warp.from_config(wf.to_config())
    assert again == wf
    assert again.eval(t0) == wf.eval(t0)


def test_unknown_family():
    with pytest.raises(ValueError, match="unknown warping family"):
        warp.from_config({"family": "sinh"})


def test_interval_parsing():
    iv = IntervalSpec.parse(["-inf", 3])
    assert iv.lower == -math.inf and iv.upper == 3.0
    assert iv.to_list() == ["-inf", 3.0]
    assert iv.finite_window() == (-5.0, 3.0)
    assert IntervalSpec(1, 2).is_subset_of(IntervalSpec(0, "inf"))
    with pytest.raises(ValueError):
        IntervalSpec(2, 1)


@pytest.mark.parametrize("wf,t0", FAMILY_CASES)
def test_closed_forms_against_differences(wf, t0):
    # Centered differences converge to the closed forms at second order.
    errs = []
    for h in (1e-2, 5e-3):
        fd = (wf.f(t0 + h) - wf.f(t0 - h)) / (2 * h)
        errs.append(abs(fd - wf.df(t0)))
        prim = (wf.primitive(t0 + h) - wf.primitive(t0 - h)) / (2 * h)
        assert prim == pytest.approx(wf.f(t0), rel=1e-4)
    if errs[0] > 1e-13:
        assert errs[0] / errs[1] >= 3.5


@settings(max_examples=60, deadline=None)
@given(idx=st.integers(0, len(FAMILY_CASES) - 1), dt=st.floats(-0.3, 0.3))
def test_logf_second_matches_quotient(idx, dt):
    wf, t0 = FAMILY_CASES[idx]
    t = t0 + dt
    v = wf.eval(t)
    expected = (v.f_second * v.f - v.f_prime**2) / v.f**2
    assert v.logf_second == pytest.approx(expected, rel=1e-12, abs=1e-14)


def test_log_concavity_examples():
    lc = warp.log_concavity_margin(warp.Exponential(), IntervalSpec(-2, 2))
    assert lc.min_of_minus_logf_second == 0.0 and lc.holds
    lc = warp.log_concavity_margin(warp.Cosh(), IntervalSpec(-1, 1))
    assert lc.min_of_minus_logf_second < 0 and not lc.holds
    lc = warp.log_concavity_margin(warp.PowerLaw(1.0), IntervalSpec(1, 10))
    assert lc.min_of_minus_logf_second == pytest.approx(0.01, rel=1e-12) and lc.holds


def test_window_outside_domain_rejected():
    with pytest.raises(DomainError):
        warp.log_concavity_margin(warp.PowerLaw(1.0), IntervalSpec(-1, 1))


def test_inf_ratio_alpha():
    assert warp.inf_ratio_alpha(warp.Exponential()) == 1.0
    assert warp.inf_ratio_alpha(warp.Constant(3.0)) == 0.0
    assert warp.inf_ratio_alpha(warp.PowerLaw(1.0), IntervalSpec(1, 4)) == pytest.approx(1 / 16)


def test_sample_grid_drops_open_endpoints():
    t = warp.sample_grid(warp.PowerLaw(1.0), None, 11)
    assert t.min() > 0 and t.max() == 5.0
