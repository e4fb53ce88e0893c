"""Explicit time integration of the shifting-habitat Cauchy problem.

The state lives on a static uniform grid wide enough that nothing reaches
the edges before the final time (checked up front by :func:`domain_guard`).
Populations are sampled along moving frames ``x = x0 + c*t`` and the final
part of those samples is turned into per-band verdicts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .dispersion import SpeedReport, Symbol, minimize_speed, speed_report
from .errors import ConfigError, IntegrationError, ModelError, ShiftwaveError
from .model import ValidatedModel
from .operators import dispersal

EXTINCT_TOL = 1e-3
SATURATION_TOL = 0.05
COEXISTENCE_TOL = 0.05
BAND_OFFSET = 0.1
FINAL_WINDOW = 0.2
KAPPA_FACTOR = 0.5
FAR_FIELD_LEVEL = 1e-8


@dataclass(frozen=True)
class SimGrid:
    x_min: float
    x_max: float
    h: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.h > 0):
            raise ModelError("simulation grid needs x_max > x_min and h > 0")

    @property
    def n(self) -> int:
        return int(round((self.x_max - self.x_min) / self.h)) + 1

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.n)


@dataclass(frozen=True, eq=False)
class Field:
    """Population densities ``u`` (prey) and ``v`` (predator) at time ``t``."""

    x_min: float
    h: float
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    @property
    def n(self) -> int:
        return self.u.size

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.n)

    @property
    def x_max(self) -> float:
        return self.x_min + self.h * (self.n - 1)

    def in_class(self, b: float, tol: float = 1e-12) -> bool:
        """Whether ``0 <= u <= 1`` and ``0 <= v <= b-1`` up to ``tol``."""
        return bool(np.all(self.u >= -tol) and np.all(self.u <= 1.0 + tol)
                    and np.all(self.v >= -tol) and np.all(self.v <= b - 1.0 + tol))

    def shifted(self, dx: float) -> "Field":
        return Field(self.x_min + dx, self.h, self.u, self.v, self.t)


# --------------------------------------------------------------------------
# Initial data
# --------------------------------------------------------------------------

def cos2_bump(x: np.ndarray, center: float, width: float) -> np.ndarray:
    """``cos^2`` bump with peak 1 at ``center`` and support ``[center - width/2, center + width/2]``."""
    y = (x - center) / width
    return np.where(np.abs(y) <= 0.5, np.cos(np.pi * y) ** 2, 0.0)


def smooth_step(x: np.ndarray, center: float, width: float) -> np.ndarray:
    """1 left of ``center - width/2``, 0 right of ``center + width/2``, ``cos^2`` in between."""
    y = np.clip((x - center) / width + 0.5, 0.0, 1.0)
    return np.cos(0.5 * np.pi * y) ** 2


INITIAL_KINDS = ("bump", "pair-of-bumps", "front-like")


def make_initial(kind: str, center: float, width: float, amplitude_u: float, amplitude_v: float,
                 grid: SimGrid, b: float) -> Field:
    """Initial field in the class ``0 <= u <= 1, 0 <= v <= b-1``.

    ``bump``: both species share one bump. ``pair-of-bumps``: prey bump at
    ``center - width/2`` and predator bump at ``center + width/2``, each of
    width ``width``. ``front-like``: prey is a smoothed step falling from its
    amplitude to zero across ``[center - width/2, center + width/2]`` and the
    predator a bump on the same interval.
    """
    if kind not in INITIAL_KINDS:
        raise ConfigError(f"unknown initial kind {kind!r}; expected one of {', '.join(INITIAL_KINDS)}")
    if not width > 0:
        raise ConfigError("initial width must be positive")
    if not 0.0 <= amplitude_u <= 1.0:
        raise ConfigError(f"prey amplitude {amplitude_u:g} outside [0, 1]")
    if not 0.0 <= amplitude_v <= b - 1.0:
        raise ConfigError(f"predator amplitude {amplitude_v:g} outside [0, b-1] = [0, {b - 1.0:g}]")
    x = grid.x
    if kind == "bump":
        u = amplitude_u * cos2_bump(x, center, width)
        v = amplitude_v * cos2_bump(x, center, width)
    elif kind == "pair-of-bumps":
        u = amplitude_u * cos2_bump(x, center - 0.5 * width, width)
        v = amplitude_v * cos2_bump(x, center + 0.5 * width, width)
    else:
        u = amplitude_u * smooth_step(x, center, width)
        v = amplitude_v * cos2_bump(x, center, width)
    return Field(grid.x_min, grid.h, u, v, 0.0)


# --------------------------------------------------------------------------
# Time stepping
# --------------------------------------------------------------------------

def reaction_bounds(model: ValidatedModel) -> tuple[float, float]:
    """Largest per-capita loss rates of prey and predator on the invariant box."""
    p = model.params
    lam1 = abs(model.habitat.alpha_minus) + 2.0 + p.a * (p.b - 1.0)
    lam2 = 1.0 + p.b + (p.b - 1.0)
    return lam1, lam2


def dt_max(model: ValidatedModel, h: float) -> float:
    """Largest explicit step keeping the update order-preserving on the invariant box.

    Nonlocal: ``dt*(2*d_i + r_i*L_i) <= 0.9``. Local: the diagonal of the
    second difference is ``2*d_i/h**2``, which replaces ``2*d_i``.
    """
    p = model.params
    lam1, lam2 = reaction_bounds(model)
    if model.local:
        g1, g2 = 2.0 * p.d1 / h**2, 2.0 * p.d2 / h**2
    else:
        g1, g2 = 2.0 * p.d1, 2.0 * p.d2
    return 0.9 / max(g1 + p.r1 * lam1, g2 + p.r2 * lam2)


class Stepper:
    """Forward-Euler update for one model on one grid, with cached kernel weights."""

    def __init__(self, model: ValidatedModel, x_min: float, h: float, n: int, anchor: float = 0.0):
        self.model = model
        self.h = float(h)
        self.x = x_min + h * np.arange(n)
        self.anchor = float(anchor)
        if model.local:
            self.w1 = self.w2 = None
            self.edge = "mirror"
        else:
            self.w1 = model.kernel_prey.weights(h)
            self.w2 = model.kernel_pred.weights(h)
            self.edge = "constant"
        self.limit = dt_max(model, h)

    @classmethod
    def for_field(cls, model: ValidatedModel, state: Field, anchor: float = 0.0) -> "Stepper":
        return cls(model, state.x_min, state.h, state.n, anchor)

    def habitat(self, t: float) -> np.ndarray:
        return np.asarray(self.model.habitat(self.x - self.anchor - self.model.params.s * t),
                          dtype=float) * np.ones_like(self.x)

    def rates(self, u: np.ndarray, v: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
        p = self.model.params
        alpha = self.habitat(t)
        du = dispersal(u, p.d1, self.w1, self.h, self.edge) + p.r1 * u * (alpha - u - p.a * v)
        dv = dispersal(v, p.d2, self.w2, self.h, self.edge) + p.r2 * v * (-1.0 + p.b * u - v)
        return du, dv

    def check_dt(self, dt: float) -> None:
        if not 0 < dt <= self.limit * (1.0 + 1e-12):
            raise ModelError(f"time step {dt:g} exceeds the stability bound {self.limit:g}")

    def advance(self, u: np.ndarray, v: np.ndarray, t: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
        du, dv = self.rates(u, v, t)
        u_new = u + dt * du
        v_new = v + dt * dv
        if not (np.isfinite(u_new).all() and np.isfinite(v_new).all()):
            raise IntegrationError("non-finite values after explicit step", t)
        return u_new, v_new


def step(state: Field, model: ValidatedModel, dt: float, anchor: float = 0.0) -> Field:
    """One explicit Euler step; the habitat is evaluated at ``x - anchor - s*t``."""
    stepper = Stepper.for_field(model, state, anchor)
    stepper.check_dt(dt)
    u, v = stepper.advance(state.u, state.v, state.t, dt)
    return Field(state.x_min, state.h, u, v, state.t + dt)


# --------------------------------------------------------------------------
# Runs with moving-frame probes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ProbeConfig:
    frames: tuple[float, ...] = ()
    cadence: float = 1.0
    origin: float = 0.0
    snapshot_times: tuple[float, ...] = ()


@dataclass(frozen=True, eq=False)
class ProbeSeries:
    """Samples at ``x = origin + c*t`` for each frame speed ``c`` plus field-wide maxima."""

    frames: np.ndarray
    times: np.ndarray
    u: np.ndarray  # (len(times), len(frames))
    v: np.ndarray
    sup_u: np.ndarray
    sup_v: np.ndarray
    sup_sum: np.ndarray
    origin: float = 0.0
    snapshots: tuple[Field, ...] = ()

    def window(self, fraction: float = FINAL_WINDOW) -> np.ndarray:
        """Boolean mask of the samples with ``t >= (1 - fraction)*T``."""
        if self.times.size == 0:
            return np.zeros(0, dtype=bool)
        return self.times >= (1.0 - fraction) * self.times[-1] - 1e-12


def extent_speed(model: ValidatedModel, report: Optional[SpeedReport] = None) -> float:
    """Fastest rightward motion in a run: the climate or either spreading speed."""
    report = report or speed_report(model)
    speeds = [model.params.s] + [e.value for e in (report.s_star_prey, report.s_star_pred) if e.defined]
    return max(speeds)


def _symbol_root(sym: Symbol, target: float) -> float:
    """Positive ``lam`` with ``D(lam) = target``; ``D`` increases on ``lam > 0``."""
    hi = 1.0
    while float(sym.dispersal(hi)) < target:
        hi *= 2.0
    return brentq(lambda lam: float(sym.dispersal(lam)) - target, 1e-12, hi, xtol=1e-12)


def decay_rates(model: ValidatedModel) -> dict[str, float]:
    """Spatial decay rates of the populations' leading tails.

    Ahead of a front the tail decays at the argmin of the spreading-speed
    objective. Where a species only dies out (prey in the hostile zone at
    rate ``r1*|alpha_minus|``, predator without prey at rate ``r2``) the tail
    decays at the root of ``D(lam) = death rate``.
    """
    p = model.params
    prey = Symbol(p.d1, model.kernel_prey)
    pred = Symbol(p.d2, model.kernel_pred)
    return {
        "prey_front": minimize_speed(prey, p.r1).lam,
        "predator_front": minimize_speed(pred, p.r2 * (p.b - 1.0)).lam,
        "prey_dieoff": _symbol_root(prey, p.r1 * abs(model.habitat.alpha_minus)),
        "predator_dieoff": _symbol_root(pred, p.r2),
    }


def tail_allowance(model: ValidatedModel, level: float = FAR_FIELD_LEVEL) -> float:
    """Distance over which the slowest-decaying tail falls to ``level``."""
    return -math.log(level) / min(decay_rates(model).values())


def domain_guard(model: ValidatedModel, init: Field, T: float, origin: float = 0.0,
                 report: Optional[SpeedReport] = None) -> None:
    """Raise unless both edges stay clear of the populations up to time ``T``."""
    tau = model.max_radius if not model.local else init.h
    support = np.flatnonzero((init.u > 0) | (init.v > 0))
    if support.size == 0:
        return
    x = init.x
    left, right = float(x[support[0]]), float(x[support[-1]])
    margin = 3.0 * tau + tail_allowance(model)
    need_right = right + extent_speed(model, report) * T + margin
    need_left = left - margin
    if need_right > init.x_max or need_left < init.x_min:
        raise ConfigError(
            f"domain [{init.x_min:g}, {init.x_max:g}] too small for T={T:g}: "
            f"need at least [{need_left:.6g}, {need_right:.6g}]"
        )


def run(model: ValidatedModel, init: Field, T: float, probes: ProbeConfig = ProbeConfig(),
        dt: Optional[float] = None, anchor: float = 0.0, guard: bool = True) -> tuple[Field, ProbeSeries]:
    """Advance ``init`` to time ``T`` and record moving-frame probes.

    The step is ``dt_max`` unless given, then shrunk so that a whole number
    of steps lands on ``T``. Probes are taken every ``round(cadence/dt)``
    steps and at the final time.
    """
    if T < 0:
        raise ConfigError("final time must be nonnegative")
    if guard:
        domain_guard(model, init, T, probes.origin)
    stepper = Stepper.for_field(model, init, anchor)
    dt = stepper.limit if dt is None else float(dt)
    stepper.check_dt(dt)
    nsteps = int(math.ceil(T / dt - 1e-9)) if T > 0 else 0
    if nsteps:
        dt = T / nsteps
    every = max(1, int(round(probes.cadence / dt))) if nsteps else 1
    snap_steps = {min(nsteps, int(round(ts / dt))) if nsteps else 0: ts for ts in probes.snapshot_times}
    frames = np.asarray(probes.frames, dtype=float)
    x = init.x
    rows_t, rows_u, rows_v, sups = [], [], [], []
    snapshots = []

    def record(u, v, t):
        pos = probes.origin + frames * t
        if np.any(pos < x[0]) or np.any(pos > x[-1]):
            raise ConfigError(f"probe left the grid at t={t:g}")
        rows_t.append(t)
        rows_u.append(np.interp(pos, x, u))
        rows_v.append(np.interp(pos, x, v))
        sups.append((float(np.max(u)), float(np.max(v)), float(np.max(u + v))))

    u, v, t0 = init.u.copy(), init.v.copy(), init.t
    record(u, v, t0)
    if 0 in snap_steps:
        snapshots.append(Field(init.x_min, init.h, u.copy(), v.copy(), t0))
    for n in range(1, nsteps + 1):
        t = t0 + (n - 1) * dt
        u, v = stepper.advance(u, v, t, dt)
        if n % every == 0 or n == nsteps:
            record(u, v, t0 + n * dt)
        if n in snap_steps:
            snapshots.append(Field(init.x_min, init.h, u.copy(), v.copy(), t0 + n * dt))
    final = Field(init.x_min, init.h, u, v, t0 + nsteps * dt)
    sup = np.array(sups).reshape(-1, 3)
    shape = (len(rows_t), frames.size)
    series = ProbeSeries(frames, np.array(rows_t), np.array(rows_u, dtype=float).reshape(shape),
                         np.array(rows_v, dtype=float).reshape(shape), sup[:, 0], sup[:, 1], sup[:, 2],
                         probes.origin, tuple(snapshots))
    return final, series


# --------------------------------------------------------------------------
# Exponential envelopes
# --------------------------------------------------------------------------

def envelope_rate(d: float, kernel, rate: float, c: float) -> float:
    """Smaller positive root of ``D(lam) + rate = lam*c`` (``D`` = kernel or local symbol)."""
    sym = Symbol(d, kernel)
    crit = minimize_speed(sym, rate)
    if c <= crit.speed:
        raise ModelError(f"frame speed {c:g} must exceed the spreading speed {crit.speed:.6g}")
    return brentq(lambda lam: float(sym.dispersal(lam)) + rate - lam * c, 1e-12, crit.lam,
                  xtol=1e-14, rtol=1e-13)


@dataclass(frozen=True)
class EnvelopeReport:
    passed: bool
    worst_margin: float
    worst_time: float
    lam: float
    A: float
    c_frame: float


def calibrate_amplitude(state: Field, values: np.ndarray, lam: float, origin: float = 0.0) -> float:
    """Smallest ``A`` with ``values <= A*exp(-lam*(x - origin))`` on the initial grid."""
    return float(np.max(values * np.exp(lam * (state.x - origin))))


def envelope_check(history: Sequence[Field], model: ValidatedModel, lam: float, c_frame: float,
                   A: Optional[float] = None, species: str = "u", origin: float = 0.0,
                   tol: float = 1e-12) -> EnvelopeReport:
    """Check ``w(x,t) <= A*exp(-lam*(x - origin - c*t))`` for ``x >= origin + c*t`` at every snapshot.

    ``A`` defaults to the calibrated amplitude of the first snapshot. The
    margin is ``min(envelope - w)`` over checked points, and the check passes
    when it is at least ``-tol``.
    """
    if species not in ("u", "v"):
        raise ValueError("species must be 'u' or 'v'")
    if not history:
        raise ValueError("envelope_check needs at least one snapshot")
    first = history[0]
    if A is None:
        A = calibrate_amplitude(first, getattr(first, species), lam, origin)
    worst, worst_t = math.inf, float("nan")
    for state in history:
        x = state.x
        w = getattr(state, species)
        ahead = x >= origin + c_frame * state.t
        if not np.any(ahead):
            continue
        env = A * np.exp(-lam * (x[ahead] - origin - c_frame * state.t))
        margin = float(np.min(env - w[ahead]))
        if margin < worst:
            worst, worst_t = margin, state.t
    return EnvelopeReport(worst >= -tol, worst, worst_t, lam, A, c_frame)


# --------------------------------------------------------------------------
# Outcome classification
# --------------------------------------------------------------------------

VERDICTS = ("Extinct", "PreyOnlySaturated", "Coexistence", "Indeterminate")


@dataclass(frozen=True)
class Thresholds:
    eps_ext: float = EXTINCT_TOL
    eps_sat: float = SATURATION_TOL
    eps_coex: float = COEXISTENCE_TOL
    band_offset: float = BAND_OFFSET
    kappa_factor: float = KAPPA_FACTOR
    v_min: float = EXTINCT_TOL
    window: float = FINAL_WINDOW


@dataclass(frozen=True)
class BandVerdict:
    name: str
    lo: float
    hi: float
    verdict: str
    expected: str
    levels: dict = field(default_factory=dict)
    reason: str = ""

    @property
    def agrees(self) -> bool:
        return self.verdict == self.expected


@dataclass(frozen=True)
class OutcomeReport:
    bands: tuple[BandVerdict, ...]
    kappa_floor: float
    target: tuple[float, float]
    thresholds: Thresholds

    @property
    def agrees(self) -> bool:
        return all(b.agrees for b in self.bands)

    def __getitem__(self, name: str) -> BandVerdict:
        for b in self.bands:
            if b.name == name:
                return b
        raise KeyError(name)


def _band(lo: float, hi: float, name: str) -> tuple[float, float]:
    if not lo < hi:
        raise ConfigError(f"band {name} collapsed: ({lo:g}, {hi:g}); reduce the band offset")
    return lo, hi


def classify_outcome(series: ProbeSeries, model: ValidatedModel, speeds: Optional[SpeedReport] = None,
                     thresholds: Thresholds = Thresholds()) -> OutcomeReport:
    """Per-band verdicts from the final window of a probe series.

    Bands are set by the climate speed against the spreading speeds. Each
    band gets the verdict its levels support and, alongside it, the verdict
    the asymptotic theory predicts for that band.
    """
    speeds = speeds or speed_report(model)
    p = model.params
    s = p.s
    th = thresholds
    eps = th.band_offset
    cs = model.coexistence
    kappa = 1.0 - p.a * (p.b - 1.0)
    s_prey = speeds.s_star_prey.value
    s_pred = speeds.s_star_pred.value
    win = series.window(th.window)
    if not np.any(win):
        raise ConfigError("probe series has no samples in the final window")
    u_w, v_w = series.u[win], series.v[win]
    sup_u, sup_v, sup_sum = (float(np.max(a[win])) for a in (series.sup_u, series.sup_v, series.sup_sum))
    bands: list[BandVerdict] = []

    def frames_in(lo, hi):
        sel = (series.frames >= lo - 1e-12) & (series.frames <= hi + 1e-12)
        if not np.any(sel):
            raise ConfigError(f"no probe frames inside band ({lo:g}, {hi:g})")
        return sel

    if s > s_prey:
        verdict = "Extinct" if sup_sum < th.eps_ext else "Indeterminate"
        bands.append(BandVerdict("all", -math.inf, math.inf, verdict, "Extinct",
                                 {"sup_u_plus_v": sup_sum}, "" if verdict == "Extinct" else "populations remain"))
        return OutcomeReport(tuple(bands), kappa, (cs.u_star, cs.v_star), th)

    # prey-only band ahead of the predator and the climate
    lo, hi = _band(max(s, s_pred if s_pred is not None else s) + eps, s_prey - eps, "saturation")
    sel = frames_in(lo, hi)
    u_dev = float(np.max(np.abs(u_w[:, sel] - 1.0)))
    v_level = sup_v if (s_pred is None or s >= s_pred) else float(np.max(v_w[:, sel]))
    if u_dev < th.eps_sat and v_level < th.eps_ext:
        verdict, reason = "PreyOnlySaturated", ""
    elif max(float(np.max(u_w[:, sel])), v_level) < th.eps_ext:
        verdict, reason = "Extinct", ""
    else:
        verdict, reason = "Indeterminate", "no verdict criterion met"
    bands.append(BandVerdict("saturation", lo, hi, verdict, "PreyOnlySaturated",
                             {"max_abs_u_minus_1": u_dev, "max_v": v_level}, reason))

    # coexistence band behind both fronts
    if model.local:
        upper = speeds.s_hat.value
    else:
        upper = speeds.s_underline.value
    if upper is not None and s + eps < upper - eps:
        lo, hi = s + eps, upper - eps
        sel = frames_in(lo, hi)
        uu, vv = u_w[:, sel], v_w[:, sel]
        if model.local:
            dev = float(np.max(np.abs(uu - cs.u_star) + np.abs(vv - cs.v_star)))
            ok = dev < th.eps_coex
            levels = {"max_coexistence_deviation": dev}
        else:
            u_min, v_min = float(np.min(uu)), float(np.min(vv))
            ok = u_min >= kappa * th.kappa_factor and v_min >= th.v_min
            levels = {"min_u": u_min, "min_v": v_min}
        verdict = "Coexistence" if ok else "Indeterminate"
        bands.append(BandVerdict("coexistence", lo, hi, verdict, "Coexistence", levels,
                                 "" if ok else "levels outside coexistence thresholds"))

    # open band of the nonlocal theory
    if not model.local and speeds.s_underline.defined and speeds.s_hat.defined:
        lo, hi = max(s, speeds.s_underline.value), speeds.s_hat.value
        if lo < hi:
            sel = (series.frames > lo) & (series.frames < hi)
            levels = {}
            if np.any(sel):
                levels = {"min_u": float(np.min(u_w[:, sel])), "max_u": float(np.max(u_w[:, sel])),
                          "min_v": float(np.min(v_w[:, sel])), "max_v": float(np.max(v_w[:, sel]))}
            bands.append(BandVerdict("open", lo, hi, "Indeterminate", "Indeterminate", levels,
                                     "asymptotics in this band are not settled"))
    return OutcomeReport(tuple(bands), kappa, (cs.u_star, cs.v_star), th)


def frames_for(model: ValidatedModel, speeds: Optional[SpeedReport] = None, per_band: int = 7,
               band_offset: float = BAND_OFFSET) -> tuple[float, ...]:
    """Probe frame speeds covering every band :func:`classify_outcome` may use."""
    speeds = speeds or speed_report(model)
    s = model.params.s
    marks = {s, speeds.s_star_prey.value}
    for e in (speeds.s_star_pred, speeds.s_underline, speeds.s_hat):
        if e.defined:
            marks.add(e.value)
    marks = sorted(m for m in marks if m is not None)
    out = set()
    for lo, hi in zip(marks[:-1], marks[1:]):
        lo_in, hi_in = lo + band_offset, hi - band_offset
        if lo_in < hi_in:
            out.update(np.round(np.linspace(lo_in, hi_in, per_band), 12).tolist())
        out.add(round(0.5 * (lo + hi), 12))
    out.add(round(speeds.s_star_prey.value + band_offset, 12))
    return tuple(sorted(out))
