import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftwave import (ModelError, ProfilePair, RegimeError, WaveGrid, apply_P1, apply_P2, beta_floor,
                       build_sandwich_front, build_sandwich_mixed, check_supersub, classify_tails, residual_sup,
                       scalar_forced_wave, solve_wave_monotone, solve_wave_relaxation, speed_report)
from shiftwave.waves import EPS, Sandwich, WaveOperator, residual_sup_xi

from conftest import local_model, nonlocal_model

GRID = WaveGrid(-40.0, 40.0, 0.1)


@pytest.fixture(scope="module")
def front(front_model):
    sandwich = build_sandwich_front(front_model, 0.5, GRID)
    return sandwich, solve_wave_monotone(sandwich, front_model, 0.5, tol=1e-9)


@pytest.fixture(scope="module")
def mixed_setup():
    model = nonlocal_model(a=0.6, b=2.0)
    s = speed_report(model).s_star_pred.value + 0.2
    return model, s, build_sandwich_mixed(model, s, GRID)


def test_grid_check_enforces_resolution_and_length(front_model):
    with pytest.raises(ModelError, match="radius/8"):
        WaveGrid(-40, 40, 0.2).check(front_model)
    with pytest.raises(ModelError, match="40 habitat"):
        WaveGrid(-5, 5, 0.1).check(front_model)
    GRID.check(front_model)


def test_front_sandwich_is_valid(front, front_model):
    sandwich, _ = front
    report = check_supersub(sandwich, front_model, 0.5)
    assert report.passed, report.slacks
    assert sandwich.lower.in_bounds(front_model.params.b)


def test_front_sandwich_needs_front_regime():
    with pytest.raises(RegimeError):
        build_sandwich_front(nonlocal_model(a=0.6), 0.5, GRID)


def test_front_solution(front, front_model):
    _, sol = front
    cs = front_model.coexistence
    assert sol.status == "converged" and sol.gap < 1e-9
    assert sol.residual < 1e-6
    assert sol.tail == "Front"
    assert sol.pair.phi[0] == pytest.approx(cs.u_star, abs=1e-2)
    assert sol.pair.psi[0] == pytest.approx(cs.v_star, abs=1e-2)
    assert max(sol.pair.phi[-1], sol.pair.psi[-1]) < 1e-2
    # the lower waves are steady only to about 1e-11, so clipping stays at that level
    assert sol.projection < 1e-9


def test_monotone_sweeps_stay_ordered_and_in_box(front, front_model):
    sandwich, _ = front
    b = front_model.params.b
    previous = {}
    events = []

    def watch(it, phi_u, psi_u, phi_l, psi_l):
        tol = 10 * EPS
        ok = (np.all(phi_l <= phi_u + tol) and np.all(psi_l <= psi_u + tol)
              and np.all(phi_l >= -tol) and np.all(psi_u <= b - 1 + tol) and np.all(phi_u <= 1 + tol))
        if previous:
            ok &= bool(np.all(phi_u <= previous["phi_u"] + tol) and np.all(phi_l >= previous["phi_l"] - tol))
        previous.update(phi_u=phi_u.copy(), phi_l=phi_l.copy())
        events.append(bool(ok))

    solve_wave_monotone(sandwich, front_model, 0.5, tol=1e-3, callback=watch)
    assert events and all(events)


def test_relaxation_agrees_with_monotone(front, front_model):
    sandwich, sol = front
    mid = ProfilePair(GRID, 0.5 * (sandwich.upper.phi + sandwich.lower.phi),
                      0.5 * (sandwich.upper.psi + sandwich.lower.psi))
    relax = solve_wave_relaxation(front_model, 0.5, mid, T=3000, steady_tol=1e-9)
    assert relax.status == "converged"
    assert np.max(np.abs(relax.pair.phi - sol.pair.phi)) < 1e-3
    assert np.max(np.abs(relax.pair.psi - sol.pair.psi)) < 1e-3


def test_reflected_residual_matches(front, front_model):
    _, sol = front
    xi, phi_hat, psi_hat = sol.pair.reflect()
    assert residual_sup_xi(xi, phi_hat, psi_hat, front_model, 0.5) == pytest.approx(sol.residual, abs=1e-10)


def test_residual_of_upper_constant_example(front_model):
    ones = np.ones(GRID.n)
    pair = ProfilePair(GRID, ones, ones)
    z = GRID.z
    expected = np.max(np.abs(front_model.habitat(-z) - 1 - 0.4))
    assert residual_sup(pair, front_model, 0.5) == pytest.approx(expected, rel=1e-12)


def test_relaxation_rejects_start_outside_box(front_model):
    pair = ProfilePair(GRID, np.full(GRID.n, 1.5), np.zeros(GRID.n))
    with pytest.raises(ModelError):
        solve_wave_relaxation(front_model, 0.5, pair, T=1.0)


def test_mixed_sandwich_and_solution(mixed_setup):
    model, s, sandwich = mixed_setup
    assert check_supersub(sandwich, model, s).passed
    assert np.max(sandwich.lower.psi) > 0
    sol = solve_wave_monotone(sandwich, model, s, tol=1e-7)
    assert sol.tail == "MixedFrontPulse"
    assert np.max(sol.pair.psi) > 1e-2


def test_mixed_sandwich_refused_below_critical_speed():
    model = nonlocal_model(a=0.6)
    s = speed_report(model).s_star_pred.value - 0.2
    with pytest.raises(RegimeError, match="does not have any positive solution"):
        build_sandwich_mixed(model, s, GRID)


def test_halving_k_breaks_the_mixed_lower_pair(mixed_setup):
    model, s, sandwich = mixed_setup
    P = sandwich.params
    k = 0.5 * P["k"]
    z = GRID.z
    psi = np.maximum(0.0, np.exp(P["lambda1"] * z) - k * np.exp((P["lambda1"] + P["mu"]) * z))
    halved = Sandwich(sandwich.kind, sandwich.upper, ProfilePair(GRID, sandwich.lower.phi, psi), P,
                      (P["z1"], P["z2"], -np.log(k) / P["mu"]))
    report = check_supersub(halved, model, s)
    assert not report.passed and report.slacks["l2"] < 0


@given(shift=st.floats(min_value=0.0, max_value=0.5))
@settings(max_examples=15, deadline=None)
def test_fixed_point_operators_monotone(front_model, shift):
    rng = np.random.default_rng(0)
    beta = 1.1 * beta_floor(front_model)
    b = front_model.params.b
    phi = rng.uniform(0, 1 - shift, GRID.n)
    psi = rng.uniform(0, b - 1 - shift, GRID.n)
    phi2, psi_low = phi + shift, np.maximum(psi - shift, 0.0)
    # P1 increases in phi and decreases in psi; P2 increases in both arguments
    assert np.all(apply_P1(phi2, psi_low, beta, 0.5, front_model, GRID)
                  >= apply_P1(phi, psi, beta, 0.5, front_model, GRID) - 1e-12)
    assert np.all(apply_P2(phi2, psi + shift, beta, 0.5, front_model, GRID)
                  >= apply_P2(phi, psi, beta, 0.5, front_model, GRID) - 1e-12)


def test_fixed_point_identity_on_equilibria(front_model):
    beta = 1.1 * beta_floor(front_model)
    zero, cs = np.zeros(GRID.n), front_model.coexistence
    assert np.max(np.abs(apply_P2(zero, zero, beta, 0.5, front_model, GRID))) == 0.0
    op = WaveOperator(front_model, 0.5, GRID)
    const = np.full(GRID.n, cs.v_star)
    # the predator equation has no habitat term, so its coexistence level is a fixed point of P2
    assert np.max(np.abs(op.P2(np.full(GRID.n, cs.u_star), const, beta) - const)) < 1e-12


def test_beta_below_floor_rejected(front_model):
    with pytest.raises(ModelError, match="floor"):
        apply_P1(np.zeros(GRID.n), np.zeros(GRID.n), 1.0, 0.5, front_model, GRID)


def test_classify_tails_examples(front_model):
    n = GRID.n
    cs = front_model.coexistence
    assert classify_tails(ProfilePair(GRID, np.zeros(n), np.zeros(n)), front_model) == "Trivial"
    const = ProfilePair(GRID, np.full(n, cs.u_star), np.full(n, cs.v_star))
    assert classify_tails(const, front_model) == "Other"
    step = (GRID.z < 0).astype(float)
    front = ProfilePair(GRID, cs.u_star * step, cs.v_star * step)
    assert classify_tails(front, front_model) == "Front"
    bump = np.exp(-GRID.z**2)
    assert classify_tails(ProfilePair(GRID, step, 0.1 * bump), front_model) == "MixedFrontPulse"
    assert classify_tails(ProfilePair(GRID, bump, np.zeros(n)), front_model) == "Pulse"


def test_scalar_wave_local_compact_forcing_collapses():
    model = local_model()
    g = np.where(np.abs(GRID.z) < 2, -1.0, -0.5)
    wave = scalar_forced_wave(1.0, None, 1.0, g, GRID, T=50)
    assert wave.converged and np.max(np.abs(wave.profile)) < 1e-11
    assert model.local
