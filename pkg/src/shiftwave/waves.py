"""Forced-wave profiles in the flipped frame (favorable habitat at ``z -> -inf``).

The discrete wave operator is shared by every routine here::

    s * D[phi] = d1*N1[phi] + r1*phi*(alpha(-z) - phi - a*psi)
    s * D[psi] = d2*N2[psi] + r2*psi*(-1 + b*phi - psi)

with ``D`` the upwind (backward) difference and ``N`` the kernel operator
(or second difference in local mode); profiles are extended by their edge
values beyond the grid. Upper/lower solutions, the fixed-point operators,
the relaxation solver and the residual all use exactly this system, so a
monotone fixed point and a relaxation steady state solve the same equations.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.signal import lfilter

from .dispersion import (DOUBLE_ROOT_BAND, Symbol, beta_floor, delta_roots, dispersion_delta,
                         linear_speed, minimize_speed, predator_symbol, prey_symbol)
from .errors import IntegrationError, ModelError, RegimeError, ShiftwaveError
from .model import ValidatedModel
from .operators import backward_diff, dispersal

log = logging.getLogger(__name__)

LADDER_CAP = 2.0**40
EPS = np.finfo(float).eps


@dataclass(frozen=True)
class WaveGrid:
    z_min: float
    z_max: float
    h: float

    def __post_init__(self):
        if not (self.z_max > self.z_min and self.h > 0):
            raise ModelError("wave grid needs z_max > z_min and h > 0")

    @property
    def n(self) -> int:
        return int(round((self.z_max - self.z_min) / self.h)) + 1

    @property
    def z(self) -> np.ndarray:
        return self.z_min + self.h * np.arange(self.n)

    def check(self, model: ValidatedModel) -> None:
        """Enforce kernel resolution and a domain long compared with the habitat scale."""
        if model.kernels is not None and self.h > model.max_radius / 8.0 + 1e-12:
            raise ModelError(f"grid spacing h={self.h} exceeds kernel radius/8 = {model.max_radius / 8:g}")
        if self.z_max - self.z_min < 40.0 / model.habitat.rho:
            raise ModelError("wave grid shorter than 40 habitat decay lengths")


@dataclass(frozen=True, eq=False)
class ProfilePair:
    grid: WaveGrid
    phi: np.ndarray
    psi: np.ndarray

    def reflect(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Profiles in the original variable ``xi = -z``, returned on an increasing grid."""
        return -self.grid.z[::-1], self.phi[::-1].copy(), self.psi[::-1].copy()

    def in_bounds(self, b: float, tol: float = 0.0) -> bool:
        return bool(np.all(self.phi >= -tol) and np.all(self.phi <= 1 + tol)
                    and np.all(self.psi >= -tol) and np.all(self.psi <= b - 1 + tol))


@dataclass(frozen=True, eq=False)
class Sandwich:
    kind: str  # "front" | "mixed-super" | "mixed-critical"
    upper: ProfilePair
    lower: ProfilePair
    params: dict = field(default_factory=dict)
    stitches: tuple[float, ...] = ()


@dataclass(frozen=True, eq=False)
class WaveSolution:
    pair: ProfilePair
    residual: float
    tail: str
    iterations: int
    method: str
    status: str  # "converged" | "quasi-solution" | "not-converged"
    gap: float = float("nan")
    upper: Optional[ProfilePair] = None
    lower: Optional[ProfilePair] = None
    projection: float = 0.0


class WaveOperator:
    """Discrete wave system for one model, speed and grid."""

    def __init__(self, model: ValidatedModel, s: float, grid: WaveGrid):
        if not s > 0:
            raise ModelError("wave speed must be positive")
        self.model = model
        self.s = float(s)
        self.grid = grid
        self.z = grid.z
        self.h = grid.h
        self.alpha = np.asarray(model.habitat(-self.z), dtype=float) * np.ones_like(self.z)
        if model.local:
            self.w1 = self.w2 = None
        else:
            self.w1 = model.kernel_prey.weights(grid.h)
            self.w2 = model.kernel_pred.weights(grid.h)

    @property
    def p(self):
        return self.model.params

    def dispersal1(self, phi):
        return dispersal(phi, self.p.d1, self.w1, self.h)

    def dispersal2(self, psi):
        return dispersal(psi, self.p.d2, self.w2, self.h)

    def rhs1(self, phi, psi):
        p = self.p
        return self.dispersal1(phi) + p.r1 * phi * (self.alpha - phi - p.a * psi)

    def rhs2(self, phi, psi):
        p = self.p
        return self.dispersal2(psi) + p.r2 * psi * (-1.0 + p.b * phi - psi)

    def transport(self, w):
        return self.s * backward_diff(w, self.h)

    def residuals(self, phi, psi):
        return self.transport(phi) - self.rhs1(phi, psi), self.transport(psi) - self.rhs2(phi, psi)

    # fixed-point operators ------------------------------------------------
    def resolvent(self, F: np.ndarray, beta: float) -> np.ndarray:
        """Solve ``s*D[P] + beta*P = F`` left to right; ``F`` extended by ``F[0]`` below the grid."""
        gain = 1.0 / (self.s / self.h + beta)
        decay = (self.s / self.h) * gain
        return lfilter([gain], [1.0, -decay], F, zi=[decay * F[0] / beta])[0]

    def P1(self, phi, psi, beta):
        return self.resolvent(beta * phi + self.rhs1(phi, psi), beta)

    def P2(self, phi, psi, beta):
        return self.resolvent(beta * psi + self.rhs2(phi, psi), beta)


# --------------------------------------------------------------------------
# Scalar forced waves
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ScalarWave:
    profile: np.ndarray
    residual: float
    converged: bool
    time: float


def scalar_forced_wave(d: float, kernel, s: float, rate_profile, grid: WaveGrid, *, r: float = 1.0,
                       dt: Optional[float] = None, T: float = 20000.0, steady_tol: float = 1e-11,
                       init: Optional[np.ndarray] = None) -> ScalarWave:
    """Steady state of ``w_t = d*N[w] - s*D[w] + r*w*(g(z) - w)`` by explicit time marching.

    ``rate_profile`` is an array on the grid or a callable of ``z``. The
    default start is the constant ``max(g[0], 0)``. Non-convergence within
    ``T`` is a soft failure: the last profile comes back with
    ``converged=False``.
    """
    z = grid.z
    h = grid.h
    g = np.asarray(rate_profile(z) if callable(rate_profile) else rate_profile, dtype=float)
    if g.shape != z.shape:
        raise ModelError("rate profile must match the grid")
    weights = None if kernel is None else kernel.weights(h)
    w = np.full_like(z, max(g[0], 0.0)) if init is None else np.array(init, dtype=float)
    top = max(float(np.max(np.abs(g))), float(np.max(w)), 1e-12)
    spread = 2.0 * d / h**2 if kernel is None else 2.0 * d
    if dt is None:
        dt = 0.9 / (spread + s / h + 2.0 * r * top)
    t = 0.0
    res = math.inf
    nsteps = int(math.ceil(T / dt))
    for _ in range(nsteps):
        rate = dispersal(w, d, weights, h) - s * backward_diff(w, h) + r * w * (g - w)
        res = float(np.max(np.abs(rate)))
        if res < steady_tol:
            return ScalarWave(w, res, True, t)
        w = w + dt * rate
        t += dt
    return ScalarWave(w, res, False, t)


# --------------------------------------------------------------------------
# Sandwich construction
# --------------------------------------------------------------------------

def build_sandwich_front(model: ValidatedModel, s: float, grid: WaveGrid, **wave_kw) -> Sandwich:
    """Upper pair ``(1, b-1)``; lower pair from two scalar forced waves."""
    p = model.params
    if not p.front_regime:
        raise RegimeError(f"front-type sandwich needs ab < 1 (ab = {p.a * p.b:g})")
    op = WaveOperator(model, s, grid)
    gamma1 = 1.0 - p.a * (p.b - 1.0)
    gamma2 = -1.0 + p.b * gamma1
    phi_wave = scalar_forced_wave(p.d1, model.kernel_prey, s, op.alpha - p.a * (p.b - 1.0), grid,
                                  r=p.r1, **wave_kw)
    if not phi_wave.converged:
        raise ShiftwaveError(f"prey lower wave did not converge (residual {phi_wave.residual:.3g})")
    phi_low = np.clip(phi_wave.profile, 0.0, 1.0)
    psi_wave = scalar_forced_wave(p.d2, model.kernel_pred, s, -1.0 + p.b * phi_low, grid,
                                  r=p.r2, **wave_kw)
    if not psi_wave.converged:
        raise ShiftwaveError(f"predator lower wave did not converge (residual {psi_wave.residual:.3g})")
    psi_low = np.clip(psi_wave.profile, 0.0, p.b - 1.0)
    ones = np.ones_like(op.z)
    upper = ProfilePair(grid, ones, (p.b - 1.0) * ones)
    lower = ProfilePair(grid, phi_low, psi_low)
    return Sandwich("front", upper, lower,
                    {"gamma1": gamma1, "gamma2": gamma2,
                     "lower_residual": max(phi_wave.residual, psi_wave.residual)})


def _ladder(start: float, accept: Callable[[float], bool], name: str) -> float:
    value = start
    while not accept(value):
        value *= 2.0
        if value > start * LADDER_CAP:
            raise ShiftwaveError(f"could not find a valid {name} below {LADDER_CAP:g} times its start")
    return value


def grid_critical_speed(model: ValidatedModel, h: float):
    """Minimal mixed-wave speed of the discretized predator equation on spacing ``h``."""
    p = model.params
    return minimize_speed(predator_symbol(model, h), p.r2 * (p.b - 1.0))


def build_sandwich_mixed(model: ValidatedModel, s: float, grid: WaveGrid, slack_tol: float = 1e-10) -> Sandwich:
    """Upper/lower pair for the mixed front-pulse wave.

    Exponential rates are roots of the dispersion relation built from the
    grid symbols, so the exponential pieces are exact discrete solutions of
    the linearized equations. Constants are taken from a doubling ladder and
    accepted once the discrete inequalities hold.
    """
    p = model.params
    s_star = linear_speed(p.d2, model.kernel_pred, p.r2 * (p.b - 1.0)).speed if not model.local \
        else 2.0 * math.sqrt(p.d2 * p.r2 * (p.b - 1.0))
    if s < s_star * (1.0 - DOUBLE_ROOT_BAND):
        raise RegimeError(
            f"mixed-type sandwich requires s >= s_* = {s_star:.6g}; below it the wave system "
            "does not have any positive solution"
        )
    crit = grid_critical_speed(model, grid.h)
    if s < crit.speed * (1.0 - DOUBLE_ROOT_BAND):
        raise RegimeError(
            f"s = {s:.6g} is below the critical speed {crit.speed:.6g} of the equations discretized "
            f"with h = {grid.h:g}; refine the grid"
        )
    if abs(s - crit.speed) <= DOUBLE_ROOT_BAND * crit.speed:
        return _mixed_critical(model, crit.speed, crit.lam, grid, slack_tol)
    return _mixed_super(model, s, grid, slack_tol)


def _prey_A(model, s, h):
    sym = prey_symbol(model, h)
    return lambda mu: float(sym.dispersal(mu) - s * sym.transport(mu))


def _mu_ladder(mu0: float, A) -> tuple[float, int]:
    for j in range(1, 61):
        mu = mu0 / 2.0**j
        if A(mu) < 0:
            return mu, j
    raise ShiftwaveError("no decay rate mu with A(mu) < 0 found")


def _mixed_super(model, s, grid, slack_tol):
    p = model.params
    hab = model.habitat
    z = grid.z
    roots = delta_roots(s, model, h=grid.h)
    lam1, lam2 = roots.lam1, roots.lam2
    mu0 = min(lam2 - lam1, lam1, hab.rho)
    mu, _ = _mu_ladder(mu0, _prey_A(model, s, grid.h))
    z1 = math.log(p.b - 1.0) / lam1
    psi_up = np.minimum(p.b - 1.0, np.exp(lam1 * z))
    phi_up = np.ones_like(z)
    op = WaveOperator(model, s, grid)

    def phi_low_of(eta):
        return np.maximum(0.0, 1.0 - eta * np.exp(mu * z))

    def l1_ok(eta):
        z2 = -math.log(eta) / mu
        slack = op.rhs1(phi_low_of(eta), psi_up) - op.transport(phi_low_of(eta))
        return _worst(slack, z, (z1, z2), grid.h) >= -slack_tol

    eta0 = max(math.exp(-mu * min(z1, 0.0)), hab.C + p.a) * (1.0 + 1e-9)
    eta = _ladder(eta0, l1_ok, "eta")
    phi_low = phi_low_of(eta)
    delta_shift = float(dispersion_delta(lam1 + mu, s, model, h=grid.h))
    k_floor = max(eta, p.r2 * (p.b * eta + 1.0) / (-delta_shift))

    def psi_low_of(k):
        return np.maximum(0.0, np.exp(lam1 * z) - k * np.exp((lam1 + mu) * z))

    def l2_ok(k):
        z3 = -math.log(k) / mu
        psi_low = psi_low_of(k)
        slack = op.rhs2(phi_low, psi_low) - op.transport(psi_low)
        return _worst(slack, z, (z1, -math.log(eta) / mu, z3), grid.h) >= -slack_tol

    k = _ladder(k_floor, l2_ok, "k")
    z2 = -math.log(eta) / mu
    z3 = -math.log(k) / mu
    psi_low = psi_low_of(k)
    if not np.any(psi_low > 0):
        raise ShiftwaveError("lower predator profile vanishes on the grid; extend z_min")
    params = {"lambda1": lam1, "lambda2": lam2, "mu0": mu0, "mu": mu, "eta": eta, "k": k,
              "k_floor": k_floor, "z1": z1, "z2": z2, "z3": z3, "s_crit_grid": roots.s_crit}
    return Sandwich("mixed-super", ProfilePair(grid, phi_up, psi_up),
                    ProfilePair(grid, phi_low, psi_low), params, (z1, z2, z3))


def _mixed_critical(model, s, lam_star, grid, slack_tol):
    p = model.params
    hab = model.habitat
    z = grid.z
    tau = model.max_radius if model.kernels is not None else grid.h
    bm1 = p.b - 1.0

    def Psi(zz, L):
        return -L * zz * np.exp(lam_star * zz)

    def stitch_points(L):
        peak = -1.0 / lam_star
        if Psi(peak, L) <= bm1 * (1.0 + 1e-12):
            return peak, peak
        lo = peak - 1.0
        while Psi(lo, L) > bm1:
            lo -= 2.0 * (peak - lo)
        zl = brentq(lambda x: Psi(x, L) - bm1, lo, peak, xtol=1e-14)
        zr = brentq(lambda x: Psi(x, L) - bm1, peak, 0.0, xtol=1e-14)
        return zl, zr

    L = _ladder(bm1 * lam_star * math.e,
                lambda L: (lambda a, b_: b_ - a > tau)(*stitch_points(L)), "L")
    z1, z1_hat = stitch_points(L)
    psi_up = np.where(z < z1, Psi(z, L), bm1)
    phi_up = np.ones_like(z)
    op = WaveOperator(model, s, grid)
    mu0 = min(hab.rho, lam_star / 2.0)
    mu, _ = _mu_ladder(mu0, _prey_A(model, s, grid.h))
    lam_t = lam_star - 0.5 * mu

    def phi_low_of(eta):
        return np.maximum(0.0, 1.0 - eta * np.exp(mu * z))

    def eta_ok(eta):
        z2 = -math.log(eta) / mu
        if not (z2 < -1.0 / (lam_star - lam_t) and -L * z2 * math.exp((lam_star - lam_t) * z2) < eta):
            return False
        if z2 > z1:
            return False
        slack = op.rhs1(phi_low_of(eta), psi_up) - op.transport(phi_low_of(eta))
        return _worst(slack, z, (z1, z2), grid.h) >= -slack_tol

    eta = _ladder(max(hab.C + p.a, math.exp(-mu * min(z1, 0.0)), 2.0), eta_ok, "eta")
    phi_low = phi_low_of(eta)
    z2 = -math.log(eta) / mu

    if model.kernels is not None:
        k2 = model.kernel_pred
        second = float(np.trapezoid(k2.values * k2.nodes**2 * np.exp(-lam_star * k2.nodes), k2.nodes))
    else:
        second = 2.0
    zz = -np.geomspace(1e-6, 1e4, 20001)
    I2 = p.r2 * p.b * eta**2 * np.exp((mu + lam_t - lam_star) * zz) + p.r2 * eta**2 * np.exp((2 * lam_t - lam_star) * zz)
    Q = float(np.max(8.0 * (-zz + tau) ** 1.5 * I2) / (p.d2 * second))

    def psi_low_of(q):
        return np.maximum(0.0, (-L * z - q * np.sqrt(np.maximum(-z, 0.0))) * np.exp(lam_star * z))

    def l2_ok(q):
        z3 = -(q / L) ** 2
        psi_low = psi_low_of(q)
        if not np.any(psi_low > 0):
            return True  # caller rejects a vanished profile
        slack = op.rhs2(phi_low, psi_low) - op.transport(psi_low)
        return _worst(slack, z, (z1, z2, z3), grid.h) >= -slack_tol

    q = _ladder(L * math.sqrt(math.log(eta) / mu) * (1.0 + 1e-9), l2_ok, "q")
    psi_low = psi_low_of(q)
    z3 = -(q / L) ** 2
    if not np.any(psi_low > 0):
        raise ShiftwaveError("lower predator profile vanishes on the grid; extend z_min")
    params = {"lambda_star": lam_star, "L": L, "mu": mu, "lambda_tilde": lam_t, "eta": eta, "q": q,
              "Q": Q, "z1": z1, "z1_hat": z1_hat, "z2": z2, "z3": z3, "s_crit_grid": s}
    return Sandwich("mixed-critical", ProfilePair(grid, phi_up, psi_up),
                    ProfilePair(grid, phi_low, psi_low), params, (z1, z2, z3))


def _away_mask(z, stitches, h):
    mask = np.ones(z.shape, dtype=bool)
    for zs in stitches:
        mask &= np.abs(z - zs) > 2.0 * h
    return mask


def _worst(slack, z, stitches, h):
    mask = _away_mask(z, stitches, h)
    return float(np.min(slack[mask])) if np.any(mask) else math.inf


# --------------------------------------------------------------------------
# Verification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SupersubReport:
    slacks: dict
    locations: dict
    passed: bool
    slack_tol: float


def check_supersub(sandwich: Sandwich, model: ValidatedModel, s: float, slack_tol: float = 1e-8,
                   grid: Optional[WaveGrid] = None) -> SupersubReport:
    """Worst signed slack of the four discrete upper/lower inequalities away from stitch points."""
    grid = grid or sandwich.upper.grid
    op = WaveOperator(model, s, grid)
    up, lo = sandwich.upper, sandwich.lower
    slacks = {
        "u1": op.transport(up.phi) - op.rhs1(up.phi, lo.psi),
        "u2": op.transport(up.psi) - op.rhs2(up.phi, up.psi),
        "l1": op.rhs1(lo.phi, up.psi) - op.transport(lo.phi),
        "l2": op.rhs2(lo.phi, lo.psi) - op.transport(lo.psi),
    }
    mask = _away_mask(op.z, sandwich.stitches, grid.h)
    worst, where = {}, {}
    for name, arr in slacks.items():
        masked = np.where(mask, arr, np.inf)
        i = int(np.argmin(masked))
        worst[name] = float(masked[i])
        where[name] = float(op.z[i])
    ordered = bool(np.all(lo.phi <= up.phi) and np.all(lo.psi <= up.psi))
    passed = ordered and all(v >= -slack_tol for v in worst.values())
    return SupersubReport(worst, where, passed, slack_tol)


def apply_P1(phi, psi, beta, s, model, grid: WaveGrid):
    _check_beta(beta, model, grid)
    return WaveOperator(model, s, grid).P1(np.asarray(phi, float), np.asarray(psi, float), beta)


def apply_P2(phi, psi, beta, s, model, grid: WaveGrid):
    _check_beta(beta, model, grid)
    return WaveOperator(model, s, grid).P2(np.asarray(phi, float), np.asarray(psi, float), beta)


def _check_beta(beta, model, grid):
    floor = beta_floor(model, grid.h)
    if not beta > floor:
        raise ModelError(f"beta = {beta:g} must exceed the monotonicity floor {floor:g}")


def residual_sup(pair: ProfilePair, model: ValidatedModel, s: float) -> float:
    r1, r2 = WaveOperator(model, s, pair.grid).residuals(pair.phi, pair.psi)
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))


def residual_sup_xi(xi: np.ndarray, phi_hat: np.ndarray, psi_hat: np.ndarray,
                    model: ValidatedModel, s: float) -> float:
    """Residual of the unflipped system ``-s*u' = d*N[u] + ...`` with habitat ``alpha(xi)``.

    The derivative is the forward difference (upwind for transport toward
    ``-xi``), the mirror image of the flipped scheme.
    """
    p = model.params
    h = float(xi[1] - xi[0])
    w1 = None if model.local else model.kernel_prey.weights(h)
    w2 = None if model.local else model.kernel_pred.weights(h)
    alpha = np.asarray(model.habitat(xi), dtype=float) * np.ones_like(xi)

    def fwd(u):
        out = np.zeros_like(u)
        out[:-1] = (u[1:] - u[:-1]) / h
        return out

    e1 = -s * fwd(phi_hat) - dispersal(phi_hat, p.d1, w1, h) - p.r1 * phi_hat * (alpha - phi_hat - p.a * psi_hat)
    e2 = -s * fwd(psi_hat) - dispersal(psi_hat, p.d2, w2, h) - p.r2 * psi_hat * (-1 + p.b * phi_hat - psi_hat)
    return float(max(np.max(np.abs(e1)), np.max(np.abs(e2))))


def classify_tails(pair: ProfilePair, model: ValidatedModel, tail_tol: float = 1e-2,
                   edge_fraction: float = 0.05) -> str:
    """Tag the profile by its edge averages: Front, MixedFrontPulse, Pulse, Trivial or Other."""
    n = pair.phi.size
    m = max(1, int(round(edge_fraction * n)))
    left = np.array([pair.phi[:m].mean(), pair.psi[:m].mean()])
    right = np.array([pair.phi[-m:].mean(), pair.psi[-m:].mean()])
    cs = model.coexistence

    def near(x, target):
        return bool(np.all(np.abs(x - np.asarray(target)) < tail_tol))

    if max(np.max(pair.phi), np.max(pair.psi)) < tail_tol:
        return "Trivial"
    if near(right, (0.0, 0.0)):
        if near(left, (cs.u_star, cs.v_star)):
            return "Front"
        if near(left, (1.0, 0.0)) and np.max(pair.psi) > tail_tol:
            return "MixedFrontPulse"
        if near(left, (0.0, 0.0)) and np.max(pair.phi) > tail_tol:
            return "Pulse"
    return "Other"


# --------------------------------------------------------------------------
# Solvers
# --------------------------------------------------------------------------

def solve_wave_monotone(sandwich: Sandwich, model: ValidatedModel, s: float, tol: float = 1e-7,
                        maxiter: int = 200000, beta: Optional[float] = None,
                        callback: Optional[Callable] = None) -> WaveSolution:
    """Coupled monotone iteration of the fixed-point operators from a sandwich.

    Each sweep updates upper-phi, upper-psi, lower-phi, lower-psi in that
    order. Returns the midpoint once the sup gap drops below ``tol``;
    otherwise a quasi-solution carrying the remaining gap.
    """
    grid = sandwich.upper.grid
    op = WaveOperator(model, s, grid)
    if beta is None:
        beta = 1.1 * beta_floor(model, grid.h)
    _check_beta(beta, model, grid)
    phi_u, psi_u = sandwich.upper.phi.copy(), sandwich.upper.psi.copy()
    phi_l, psi_l = sandwich.lower.phi.copy(), sandwich.lower.psi.copy()
    order_tol = 10.0 * EPS
    up_phi, up_psi = sandwich.upper.phi, sandwich.upper.psi
    lo_phi, lo_psi = sandwich.lower.phi, sandwich.lower.psi
    clipped = 0.0

    # Exact operators map the sandwich into itself; on a truncated grid the
    # edge closure can break this by round-off-sized amounts, which the
    # unstable predator-free state would otherwise amplify.
    def project(new, lo, up):
        nonlocal clipped
        out = np.clip(new, lo, up)
        clipped = max(clipped, float(np.max(np.abs(out - new))))
        return out

    gap = math.inf
    it = 0
    for it in range(1, maxiter + 1):
        psi_u_prev = psi_u
        phi_u = project(op.P1(phi_u, psi_l, beta), lo_phi, up_phi)
        psi_u = project(op.P2(phi_u, psi_u, beta), lo_psi, up_psi)
        phi_l = project(op.P1(phi_l, psi_u_prev, beta), lo_phi, up_phi)
        psi_l = project(op.P2(phi_l, psi_l, beta), lo_psi, up_psi)
        if np.any(phi_l > phi_u + order_tol) or np.any(psi_l > psi_u + order_tol):
            raise IntegrationError(f"sandwich ordering lost at sweep {it}; beta too small or grid too coarse")
        gap = float(max(np.max(phi_u - phi_l), np.max(psi_u - psi_l)))
        if callback is not None:
            callback(it, phi_u, psi_u, phi_l, psi_l)
        if gap < tol:
            break
    mid = ProfilePair(grid, 0.5 * (phi_u + phi_l), 0.5 * (psi_u + psi_l))
    status = "converged" if gap < tol else "quasi-solution"
    return WaveSolution(mid, residual_sup(mid, model, s), classify_tails(mid, model), it, "monotone",
                        status, gap, ProfilePair(grid, phi_u, psi_u), ProfilePair(grid, phi_l, psi_l),
                        projection=clipped)


def relaxation_dt(model: ValidatedModel, s: float, h: float) -> float:
    p = model.params
    lam1 = abs(model.habitat.alpha_minus) + 2.0 + p.a * (p.b - 1.0)
    lam2 = 2.0 * p.b
    g1, g2 = (2.0 * p.d1 / h**2, 2.0 * p.d2 / h**2) if model.local else (2.0 * p.d1, 2.0 * p.d2)
    return 0.9 / max(g1 + s / h + p.r1 * lam1, g2 + s / h + p.r2 * lam2)


def solve_wave_relaxation(model: ValidatedModel, s: float, init: ProfilePair, dt: Optional[float] = None,
                          T: float = 5000.0, steady_tol: float = 1e-9, check_every: int = 50) -> WaveSolution:
    """Time-march the moving-frame system from ``init`` until its rate drops below ``steady_tol``."""
    grid = init.grid
    p = model.params
    op = WaveOperator(model, s, grid)
    if not init.in_bounds(p.b, 1e-12):
        raise ModelError("relaxation start must lie in 0<=phi<=1, 0<=psi<=b-1")
    dt = relaxation_dt(model, s, grid.h) if dt is None else dt
    phi, psi = init.phi.copy(), init.psi.copy()
    nsteps = int(math.ceil(T / dt))
    rate = math.inf
    n = 0
    for n in range(1, nsteps + 1):
        g1 = op.rhs1(phi, psi) - op.transport(phi)
        g2 = op.rhs2(phi, psi) - op.transport(psi)
        phi = phi + dt * g1
        psi = psi + dt * g2
        if n % check_every == 0 or n == nsteps:
            if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(psi))):
                raise IntegrationError("non-finite values in relaxation", (n - 1) * dt)
            if not ProfilePair(grid, phi, psi).in_bounds(p.b, 1e-6):
                raise IntegrationError("relaxation left the invariant box", n * dt)
            rate = float(max(np.max(np.abs(g1)), np.max(np.abs(g2))))
            if rate < steady_tol:
                break
    pair = ProfilePair(grid, phi, psi)
    status = "converged" if rate < steady_tol else "not-converged"
    return WaveSolution(pair, residual_sup(pair, model, s), classify_tails(pair, model), n,
                        "relaxation", status)
