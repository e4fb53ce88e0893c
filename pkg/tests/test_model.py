import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftwave import (HabitatProfile, Kernel, ModelError, ModelParams, coexistence_state, habitat_value,
                       kernel_mgf, validate_model)
from shiftwave.errors import OverflowGuardError
from shiftwave.model import read_table

positive = st.floats(min_value=0.05, max_value=5.0)


def sinhc(x):
    return math.sinh(x) / x


def test_uniform_mgf_matches_closed_form():
    assert kernel_mgf(Kernel.uniform(1.0), 1.0) == pytest.approx(math.sinh(1.0), abs=1e-7)


def test_raised_cosine_mgf_matches_closed_form():
    expected = math.sinh(1.0) * math.pi**2 / (1.0 + math.pi**2)
    assert kernel_mgf(Kernel.raised_cosine(1.0), 1.0) == pytest.approx(expected, abs=1e-8)
    assert expected == pytest.approx(1.0671, abs=1e-4)


@pytest.mark.parametrize("radius", [0.5, 1.0, 3.0])
def test_mgf_at_zero_is_one(radius):
    for k in (Kernel.uniform(radius), Kernel.raised_cosine(radius)):
        assert kernel_mgf(k, 0.0) == pytest.approx(1.0, abs=1e-12)


@given(lam=st.floats(min_value=-15.0, max_value=15.0))
@settings(max_examples=60, deadline=None)
def test_mgf_at_least_one(lam):
    assert kernel_mgf(Kernel.raised_cosine(1.0, 801), lam) >= 1.0 - 1e-12


def test_mgf_convex_and_even_on_grid():
    k = Kernel.raised_cosine(1.0, 2001)
    lam = np.linspace(-10, 10, 401)
    m = kernel_mgf(k, lam)
    assert np.all(np.diff(m, 2) >= -1e-10)
    assert np.allclose(m, m[::-1], rtol=1e-12)


def test_mgf_quadrature_error_is_at_least_second_order():
    # the raised cosine is flat at its support edges, so the trapezoid rule does better than h**2
    exact = math.sinh(2.0) / 2.0 * math.pi**2 / (4.0 + math.pi**2)
    errs = [abs(kernel_mgf(Kernel.raised_cosine(1.0, n), 2.0) - exact) for n in (101, 201, 401)]
    assert errs[0] / errs[1] >= 3.8
    assert errs[1] / errs[2] >= 3.8


def test_mgf_overflow_guard():
    with pytest.raises(OverflowGuardError):
        kernel_mgf(Kernel.uniform(1.0), 800.0)


def test_kernel_check_rejects_bad_tables():
    y = np.linspace(-1, 1, 11)
    with pytest.raises(ModelError, match="normalization"):
        Kernel.from_table(y, np.ones_like(y)).check()
    lopsided = np.where(y > 0, 1.0, 0.0)
    with pytest.raises(ModelError, match="symmetry"):
        Kernel.from_table(y, lopsided, normalize=True).check()
    with pytest.raises(ModelError, match="nonnegative"):
        Kernel.from_table(y, np.cos(3 * y), normalize=True).check()


def test_kernel_weights_sum_to_one_and_are_symmetric():
    for k in (Kernel.raised_cosine(1.0), Kernel.uniform(2.0)):
        w = k.weights(0.1)
        assert w.sum() == pytest.approx(1.0, abs=1e-15)
        assert np.array_equal(w, w[::-1])


def test_kernel_weights_need_resolution():
    with pytest.raises(ModelError):
        Kernel.raised_cosine(1.0).weights(2.0)


def test_table_kernel_from_file(tmp_path):
    y = np.linspace(-1, 1, 201)
    vals = (1 + np.cos(np.pi * y)) / 2
    path = tmp_path / "k.txt"
    path.write_text("# y J\n" + "\n".join(f"{a:.17g} {b:.17g}" for a, b in zip(y, vals)) + "\n")
    k = Kernel.from_file(path)
    k.check()
    assert kernel_mgf(k, 1.0) == pytest.approx(math.sinh(1.0) * math.pi**2 / (1 + math.pi**2), abs=1e-4)


def test_read_table_reports_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("0 1\n1 2 3\n")
    with pytest.raises(ModelError, match=":2:"):
        read_table(path)


@given(a=positive, b=st.floats(min_value=1.01, max_value=6.0))
def test_coexistence_state_zeroes_homogeneous_reaction(a, b):
    cs = coexistence_state(a, b)
    assert cs.u_star * (1 - cs.u_star - a * cs.v_star) == pytest.approx(0.0, abs=1e-14)
    assert cs.v_star * (-1 + b * cs.u_star - cs.v_star) == pytest.approx(0.0, abs=1e-14)
    assert 0 < cs.u_star <= 1 and 0 < cs.v_star < b - 1


def test_coexistence_state_examples():
    cs = coexistence_state(0.4, 2.0)
    assert (cs.u_star, cs.v_star) == pytest.approx((1.4 / 1.8, 1 / 1.8))
    cs = coexistence_state(0.3, 2.0)
    assert (cs.u_star, cs.v_star) == pytest.approx((0.8125, 0.625))


def test_coexistence_needs_b_above_one():
    with pytest.raises(ModelError):
        coexistence_state(0.5, 1.0)


@given(alpha_minus=st.floats(min_value=-5, max_value=-0.01), gamma=st.floats(min_value=0.1, max_value=5))
@settings(max_examples=50)
def test_tanh_habitat_monotone_and_approach_bound(alpha_minus, gamma):
    hab = HabitatProfile.tanh(alpha_minus, gamma)
    z = np.linspace(-20 / gamma, 20 / gamma, 601)
    values = habitat_value(hab, z)
    assert np.all(np.diff(values) >= 0)
    assert values[0] == pytest.approx(alpha_minus, abs=1e-6)
    zp = np.linspace(0, 50, 501)
    assert np.all(1 - habitat_value(hab, zp) <= hab.C * np.exp(-hab.rho * zp) * (1 + 1e-12) + 1e-15)


def test_habitat_table_validation():
    with pytest.raises(ModelError, match="nondecreasing"):
        HabitatProfile.from_table([0, 1, 2], [-1, 0.5, 0.2])
    with pytest.raises(ModelError, match="end at 1"):
        HabitatProfile.from_table([0, 1], [-1, 0.5])
    hab = HabitatProfile.from_table([-5, 0, 5], [-1, 0, 1])
    assert hab(-10) == -1 and hab(10) == 1 and hab(2.5) == pytest.approx(0.5)


@pytest.mark.parametrize("field,value", [("d1", 0.0), ("a", -1.0), ("r2", float("nan"))])
def test_params_must_be_positive(field, value):
    kw = dict(d1=1, d2=1, r1=1, r2=1, a=0.4, b=2, s=0.5)
    kw[field] = value
    with pytest.raises(ModelError, match=field):
        ModelParams(**kw)


def test_climate_speed_must_be_positive():
    with pytest.raises(ModelError, match="climate speed must be positive"):
        ModelParams(1, 1, 1, 1, 0.4, 2, 0.0)


def test_validate_model_rejects_b_at_most_one():
    params = ModelParams(1, 1, 1, 1, 0.4, 1.0, 0.5)
    with pytest.raises(ModelError, match="b must exceed 1"):
        validate_model(params, (Kernel.raised_cosine(), Kernel.raised_cosine()), HabitatProfile.tanh())


def test_validate_model_flags_uniform_kernel(uniform_model, front_model):
    assert any("test-only" in note for note in uniform_model.notes)
    assert front_model.notes == ()
    assert front_model.front_regime and not front_model.local


def test_nonlocal_needs_kernels():
    with pytest.raises(ModelError, match="kernel pair"):
        validate_model(ModelParams(1, 1, 1, 1, 0.4, 2, 0.5), None, HabitatProfile.tanh())
