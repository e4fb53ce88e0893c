import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftwave import (Kernel, UndefinedSpeedError, beta_floor, delta_roots, dispersion_delta, kernel_mgf,
                       linear_speed, local_speed, speed_report)
from shiftwave.dispersion import Symbol, minimize_speed

from conftest import local_model, nonlocal_model

S_STAR_UNIFORM = 0.90526  # predator speed for the uniform kernel, d=r=1, b=2; brute-force scan


def test_local_speed_exact():
    assert local_speed(1.0, 1.0) == 2.0
    assert local_speed(4.0, 0.25) == 2.0


def test_undefined_speed_for_nonpositive_rate():
    with pytest.raises(UndefinedSpeedError):
        linear_speed(1.0, Kernel.raised_cosine(), 0.0)
    with pytest.raises(UndefinedSpeedError):
        local_speed(1.0, -0.1)


@given(d=st.floats(min_value=0.1, max_value=5.0), r=st.floats(min_value=0.05, max_value=5.0))
@settings(max_examples=40, deadline=None)
def test_local_symbol_minimizer_matches_closed_form(d, r):
    res = minimize_speed(Symbol(d), r)
    assert res.speed == pytest.approx(2 * math.sqrt(d * r), rel=1e-9)
    assert res.lam == pytest.approx(math.sqrt(r / d), rel=1e-4)


@pytest.mark.parametrize("kernel", [Kernel.uniform(1.0), Kernel.raised_cosine(1.0)])
def test_speed_is_local_minimum(kernel):
    res = linear_speed(1.0, kernel, 1.0)
    c = lambda lam: kernel_mgf(kernel, lam) / lam
    for factor in (1 - 1e-3, 1 + 1e-3):
        assert c(res.lam * factor) >= res.speed


def test_uniform_speed_against_closed_form_scan():
    lam = np.arange(1, 200001) * 1e-4
    scan = np.min(np.sinh(lam) / lam / lam)
    assert linear_speed(1.0, Kernel.uniform(1.0), 1.0).speed == pytest.approx(scan, abs=1e-6)


def test_narrow_kernel_approaches_local_speed():
    eps = 0.05
    k = Kernel.raised_cosine(eps, 2001)
    d_local, rate = 1.0, 1.0
    d = 2.0 * d_local / k.second_moment()
    assert linear_speed(d, k, rate).speed == pytest.approx(local_speed(d_local, rate), rel=0.01)


def test_speed_report_local_example(cauchy_model):
    rep = speed_report(cauchy_model)
    assert rep.s_star_prey.value == 2.0
    assert rep.s_star_pred.value == pytest.approx(1.0)
    assert rep.s_hat.value == pytest.approx(1.0)
    assert rep.s_dstar_prey.value == pytest.approx(2 * math.sqrt(0.7))
    assert rep.s_underline.value == pytest.approx(2 * math.sqrt(0.25 * 0.4))


def test_speed_report_marks_undefined_entries():
    rep = speed_report(nonlocal_model(a=0.6, b=3.0))
    assert not rep.s_dstar_prey.defined and not rep.s_dstar_pred.defined
    assert not rep.s_underline.defined
    assert rep["s_hat"].defined


def test_delta_at_zero_and_example(uniform_model):
    assert dispersion_delta(0.0, 0.7, uniform_model) == pytest.approx(1.0)
    expected = (math.sinh(0.5) / 0.5 - 1) + 1 - 0.6
    assert dispersion_delta(0.5, 1.2, uniform_model) == pytest.approx(expected, abs=1e-8)
    assert expected == pytest.approx(0.4422, abs=1e-4)


@given(lam=st.floats(min_value=0.0, max_value=20.0))
@settings(max_examples=40, deadline=None)
def test_delta_positive_at_zero_speed(uniform_model, lam):
    assert dispersion_delta(lam, 0.0, uniform_model) >= 1.0 - 1e-12


def test_delta_roots_sign_structure(uniform_model):
    roots = delta_roots(1.2, uniform_model)
    assert roots.regime == "two-roots" and 0 < roots.lam1 < roots.lam2
    eps = 1e-4 * roots.lam1
    assert dispersion_delta(roots.lam1 - eps, 1.2, uniform_model) > 0
    assert dispersion_delta(0.5 * (roots.lam1 + roots.lam2), 1.2, uniform_model) < 0
    assert dispersion_delta(roots.lam2 + eps, 1.2, uniform_model) > 0
    grid = np.linspace(1e-3, 10, 1000)
    vals = dispersion_delta(grid, 1.2, uniform_model)
    inside = (grid > roots.lam1) & (grid < roots.lam2)
    assert np.all(vals[inside] < 0) and np.all(vals[~inside] > 0)


def test_delta_roots_regimes(uniform_model):
    crit = delta_roots(1.2, uniform_model).s_crit
    assert crit == pytest.approx(S_STAR_UNIFORM, abs=1e-5)
    double = delta_roots(crit * (1 + 1e-9), uniform_model)
    assert double.regime == "double-root" and double.lam1 == double.lam2 == double.lam_star
    assert delta_roots(0.5, uniform_model).regime == "no-root"
    assert np.all(dispersion_delta(np.linspace(1e-3, 20, 500), 0.5, uniform_model) > 0)


def test_root_transition_matches_predator_speed(uniform_model):
    speed = linear_speed(1.0, Kernel.uniform(1.0), 1.0).speed
    lo, hi = 0.5, 1.5
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if delta_roots(mid, uniform_model).regime == "no-root":
            lo = mid
        else:
            hi = mid
    assert hi == pytest.approx(speed, abs=1e-6)


@pytest.mark.parametrize("alpha_minus,r2,expected", [(-1.0, 1.0, 4.5), (-2.0, 1.0, 5.5), (-1.0, 2.0, 7.0)])
def test_beta_floor_arithmetic(alpha_minus, r2, expected):
    model = nonlocal_model(a=0.5, alpha_minus=alpha_minus, r2=r2)
    assert beta_floor(model) == pytest.approx(expected)


def test_beta_floor_local_uses_grid_diagonal():
    model = local_model()
    assert beta_floor(model, h=0.5) == pytest.approx(max(8 + 1 * (1 + 2 + 0.3), 8 + 0.25 * 3))
    with pytest.raises(ValueError):
        beta_floor(model)
