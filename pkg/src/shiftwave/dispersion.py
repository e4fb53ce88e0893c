"""Spreading speeds and the predator dispersion relation.

A speed is ``inf_{lam>0} (D(lam) + rate) / A(lam)`` where ``D`` is the
dispersal symbol (``d*(M(lam)-1)`` nonlocal, ``d*lam**2`` local) and ``A``
the transport symbol (``lam`` on the line). The same machinery evaluated with
grid symbols gives the speeds of the discretized wave equations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import OverflowGuardError, UndefinedSpeedError
from .model import MGF_OVERFLOW, Kernel, ValidatedModel, kernel_mgf
from .operators import weights_mgf

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
LAM_MIN = 1e-6
PRESCAN_POINTS = 256
DOUBLE_ROOT_BAND = 1e-8


@dataclass(frozen=True)
class Symbol:
    """Dispersal and transport symbols of one linearized equation.

    ``kernel`` None means local diffusion. ``h`` None means the continuous
    line; otherwise the upwind/grid symbols of the discrete wave operator.
    """

    d: float
    kernel: Optional[Kernel] = None
    h: Optional[float] = None
    weights: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def lam_max(self) -> float:
        if self.kernel is not None:
            return MGF_OVERFLOW / self.kernel.radius
        if self.h is not None:
            return MGF_OVERFLOW / self.h
        return 1e6

    def dispersal(self, lam):
        if self.h is None:
            if self.kernel is None:
                return self.d * np.square(lam)
            return self.d * (kernel_mgf(self.kernel, lam) - 1.0)
        if self.kernel is None:
            return self.d * 2.0 * (np.cosh(np.multiply(lam, self.h)) - 1.0) / self.h**2
        w = self.weights if self.weights is not None else self.kernel.weights(self.h)
        return self.d * (weights_mgf(w, self.h, lam) - 1.0)

    def transport(self, lam):
        if self.h is None:
            return np.asarray(lam, dtype=float) if np.ndim(lam) else float(lam)
        return -np.expm1(-np.multiply(lam, self.h)) / self.h


@dataclass(frozen=True)
class SpeedResult:
    speed: float
    lam: float


def _speed_objective(symbol: Symbol, rate: float):
    def c(lam):
        return (symbol.dispersal(lam) + rate) / symbol.transport(lam)
    return c


def _golden(f, lo: float, hi: float, tol: float = 1e-12, maxiter: int = 200) -> float:
    x1 = hi - INVPHI * (hi - lo)
    x2 = lo + INVPHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(maxiter):
        if hi - lo <= tol:
            break
        if f2 > f1:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INVPHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INVPHI * (hi - lo)
            f2 = f(x2)
    return 0.5 * (lo + hi)


def minimize_speed(symbol: Symbol, rate: float) -> SpeedResult:
    """Minimize the speed objective by log-grid prescan then golden section in log(lam)."""
    if not rate > 0:
        raise UndefinedSpeedError(rate)
    c = _speed_objective(symbol, rate)
    lam_hi = symbol.lam_max
    grid = np.geomspace(LAM_MIN, lam_hi, PRESCAN_POINTS)
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.array([c(x) for x in grid])
    values[~np.isfinite(values)] = np.inf
    i = int(np.argmin(values))
    if i == PRESCAN_POINTS - 1:
        raise OverflowGuardError("speed minimizer reached the lambda cap")
    lo = math.log(grid[max(i - 1, 0)])
    hi = math.log(grid[i + 1])
    x = _golden(lambda t: c(math.exp(t)), lo, hi)
    lam = math.exp(x)
    return SpeedResult(float(c(lam)), lam)


def linear_speed(d: float, kernel: Optional[Kernel], rate: float) -> SpeedResult:
    """Spreading speed of ``w_t = d*N[w] + rate*w`` (or ``d*w''`` when ``kernel`` is None)."""
    return minimize_speed(Symbol(d, kernel), rate)


def local_speed(d: float, rate: float) -> float:
    if not rate > 0:
        raise UndefinedSpeedError(rate)
    return 2.0 * math.sqrt(d * rate)


# --------------------------------------------------------------------------
# Speed report
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SpeedEntry:
    name: str
    value: Optional[float]
    lam: Optional[float]
    rate: float
    reason: str = ""

    @property
    def defined(self) -> bool:
        return self.value is not None


@dataclass(frozen=True)
class SpeedReport:
    s_star_prey: SpeedEntry
    s_star_pred: SpeedEntry
    s_dstar_prey: SpeedEntry
    s_dstar_pred: SpeedEntry
    s_underline: SpeedEntry
    s_hat: SpeedEntry

    def entries(self) -> list[SpeedEntry]:
        return [self.s_star_prey, self.s_star_pred, self.s_dstar_prey,
                self.s_dstar_pred, self.s_underline, self.s_hat]

    def __getitem__(self, name: str) -> SpeedEntry:
        for e in self.entries():
            if e.name == name:
                return e
        raise KeyError(name)


def _entry(name: str, d: float, kernel: Optional[Kernel], rate: float, local: bool) -> SpeedEntry:
    try:
        if local:
            value = local_speed(d, rate)
            return SpeedEntry(name, value, math.sqrt(rate / d), rate)
        res = linear_speed(d, kernel, rate)
        return SpeedEntry(name, res.speed, res.lam, rate)
    except UndefinedSpeedError as exc:
        return SpeedEntry(name, None, None, rate, str(exc))


def _min_entry(name: str, *entries: SpeedEntry) -> SpeedEntry:
    undefined = [e for e in entries if not e.defined]
    if undefined:
        return SpeedEntry(name, None, None, float("nan"), f"{undefined[0].name} undefined")
    best = min(entries, key=lambda e: e.value)
    return SpeedEntry(name, best.value, best.lam, best.rate, f"min attained by {best.name}")


def speed_report(model: ValidatedModel) -> SpeedReport:
    p = model.params
    local = model.local
    k1, k2 = model.kernel_prey, model.kernel_pred
    s_star = _entry("s_star_prey", p.d1, k1, p.r1, local)
    s_pred = _entry("s_star_pred", p.d2, k2, p.r2 * (p.b - 1.0), local)
    s_ds_prey = _entry("s_dstar_prey", p.d1, k1, p.r1 * (1.0 - p.a * (p.b - 1.0)), local)
    s_ds_pred = _entry("s_dstar_pred", p.d2, k2, p.r2 * (p.b - 1.0) * (1.0 - p.a * p.b), local)
    return SpeedReport(
        s_star_prey=s_star,
        s_star_pred=s_pred,
        s_dstar_prey=s_ds_prey,
        s_dstar_pred=s_ds_pred,
        s_underline=_min_entry("s_underline", s_ds_prey, s_ds_pred),
        s_hat=_min_entry("s_hat", s_star, s_pred),
    )


# --------------------------------------------------------------------------
# Predator dispersion relation
# --------------------------------------------------------------------------

def predator_symbol(model: ValidatedModel, h: Optional[float] = None) -> Symbol:
    return Symbol(model.params.d2, model.kernel_pred, h)


def prey_symbol(model: ValidatedModel, h: Optional[float] = None) -> Symbol:
    return Symbol(model.params.d1, model.kernel_prey, h)


def dispersion_delta(lam, s: float, model: ValidatedModel, h: Optional[float] = None):
    """``Delta(lam, s) = D2(lam) + r2*(b-1) - s*A(lam)``."""
    p = model.params
    sym = predator_symbol(model, h)
    return sym.dispersal(lam) + p.r2 * (p.b - 1.0) - s * sym.transport(lam)


@dataclass(frozen=True)
class DeltaRoots:
    regime: str  # "two-roots" | "double-root" | "no-root"
    lam1: Optional[float]
    lam2: Optional[float]
    lam_star: float
    s_crit: float


def delta_roots(s: float, model: ValidatedModel, h: Optional[float] = None) -> DeltaRoots:
    """Positive roots of ``Delta(., s)``; regime relative to the predator speed."""
    p = model.params
    sym = predator_symbol(model, h)
    crit = minimize_speed(sym, p.r2 * (p.b - 1.0))
    if abs(s - crit.speed) <= DOUBLE_ROOT_BAND * crit.speed:
        return DeltaRoots("double-root", crit.lam, crit.lam, crit.lam, crit.speed)
    if s < crit.speed:
        return DeltaRoots("no-root", None, None, crit.lam, crit.speed)

    def delta(lam):
        return dispersion_delta(lam, s, model, h)

    lam_hi = crit.lam
    while delta(lam_hi) <= 0:
        lam_hi *= 2.0
        if lam_hi > sym.lam_max:
            raise OverflowGuardError("upper root of Delta beyond the lambda cap")
    lam1 = brentq(delta, 1e-9, crit.lam, xtol=1e-14, rtol=1e-13)
    lam2 = brentq(delta, crit.lam, lam_hi, xtol=1e-14, rtol=1e-13)
    return DeltaRoots("two-roots", lam1, lam2, crit.lam, crit.speed)


def beta_floor(model: ValidatedModel, h: Optional[float] = None) -> float:
    """Lower bound on the shift making the fixed-point operators monotone.

    Local mode needs the grid spacing: the diagonal of the discrete
    second difference contributes ``2*d/h**2`` instead of ``d``.
    """
    p = model.params
    alpha_minus = model.habitat.alpha_minus
    if model.local:
        if h is None:
            raise ValueError("beta_floor for local mode needs the grid spacing h")
        g1, g2 = 2.0 * p.d1 / h**2, 2.0 * p.d2 / h**2
    else:
        g1, g2 = p.d1, p.d2
    return max(g1 + p.r1 * (-alpha_minus + 2.0 + p.a * (p.b - 1.0)),
               g2 + p.r2 * (2.0 * p.b - 1.0))
