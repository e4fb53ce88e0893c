"""Scenario runners shared by the command line and the acceptance suite."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cauchy import (Field, ProbeConfig, ProbeSeries, SimGrid, Thresholds, classify_outcome, extent_speed,
                     frames_for, make_initial, run, tail_allowance)
from .config import AUTO, ScenarioConfig
from .dispersion import speed_report
from .errors import ConfigError
from .waves import (ProfilePair, Sandwich, SupersubReport, WaveGrid, WaveOperator, WaveSolution,
                    build_sandwich_front, build_sandwich_mixed, check_supersub, solve_wave_monotone,
                    solve_wave_relaxation)

log = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# Waves
# --------------------------------------------------------------------------

@dataclass
class WaveRun:
    wave_type: str
    expected_tail: str
    sandwich: Sandwich
    supersub: SupersubReport
    solutions: dict = field(default_factory=dict)

    @property
    def primary(self) -> WaveSolution:
        return next(iter(self.solutions.values()))


def wave_type_of(cfg: ScenarioConfig) -> str:
    kind = cfg.get("scenario", "wave_type")
    if kind == AUTO:
        return "front" if cfg.model.front_regime else "mixed"
    return kind


def wave_grid(cfg: ScenarioConfig) -> WaveGrid:
    g = cfg.sections["grid"]
    grid = WaveGrid(g["z_min"], g["z_max"], g["h"])
    grid.check(cfg.model)
    return grid


def run_wave(cfg: ScenarioConfig) -> WaveRun:
    """Build the sandwich, verify it and run the configured solvers."""
    model = cfg.model
    s = model.params.s
    grid = wave_grid(cfg)
    kind = wave_type_of(cfg)
    if kind == "front":
        sandwich = build_sandwich_front(model, s, grid)
        expected = "Front"
    else:
        sandwich = build_sandwich_mixed(model, s, grid)
        expected = "MixedFrontPulse"
    report = check_supersub(sandwich, model, s)
    result = WaveRun(kind, expected, sandwich, report)
    sc = cfg.sections["scenario"]
    for solver in sc["solvers"]:
        if solver == "monotone":
            result.solutions["monotone"] = solve_wave_monotone(sandwich, model, s, tol=sc["tol"],
                                                               maxiter=sc["maxiter"])
        else:
            mid = ProfilePair(grid, 0.5 * (sandwich.upper.phi + sandwich.lower.phi),
                              0.5 * (sandwich.upper.psi + sandwich.lower.psi))
            result.solutions["relaxation"] = solve_wave_relaxation(model, s, mid, T=sc["relax_T"],
                                                                   steady_tol=sc["relax_tol"])
    return result


def local_residual(solution: WaveSolution, model, s: float) -> np.ndarray:
    r1, r2 = WaveOperator(model, s, solution.pair.grid).residuals(solution.pair.phi, solution.pair.psi)
    return np.maximum(np.abs(r1), np.abs(r2))


# --------------------------------------------------------------------------
# Cauchy simulations
# --------------------------------------------------------------------------

def sim_grid(cfg: ScenarioConfig, frames=()) -> SimGrid:
    """Configured simulation grid, or the smallest grid holding the guard and every probe frame."""
    g = cfg.sections["grid"]
    sim = cfg.sections["sim"]
    dx = g["dx"]
    if g["x_min"] != AUTO:
        return SimGrid(g["x_min"], g["x_max"], dx)
    model = cfg.model
    tau = model.max_radius if not model.local else dx
    margin = 3.0 * tau + tail_allowance(model) + 2.0 * dx
    half = 0.5 * sim["width"] if sim["initial"] != "pair-of-bumps" else sim["width"]
    left = sim["center"] - half - margin
    fastest = max([extent_speed(model), *frames])
    right = max(sim["center"] + half, sim["origin"]) + fastest * sim["T"] + margin
    x_min = dx * math.floor(left / dx)
    x_max = dx * math.ceil(right / dx)
    return SimGrid(x_min, x_max, dx)


def initial_field(cfg: ScenarioConfig, grid: Optional[SimGrid] = None, frames=()) -> Field:
    sim = cfg.sections["sim"]
    grid = grid or sim_grid(cfg, frames)
    return make_initial(sim["initial"], sim["center"], sim["width"], sim["amplitude_u"], sim["amplitude_v"],
                        grid, cfg.model.params.b)


def thresholds(cfg: ScenarioConfig) -> Thresholds:
    sim = cfg.sections["sim"]
    return Thresholds(eps_ext=sim["eps_ext"], eps_sat=sim["eps_sat"], eps_coex=sim["eps_coex"],
                      band_offset=sim["band_offset"], v_min=sim["eps_ext"], window=sim["window"])


def run_simulation(cfg: ScenarioConfig, frames=None) -> tuple[Field, ProbeSeries]:
    sim = cfg.sections["sim"]
    model = cfg.model
    if frames is None:
        frames = sim["frames"]
        if frames == AUTO:
            frames = frames_for(model, band_offset=sim["band_offset"])
    init = initial_field(cfg, frames=frames)
    probes = ProbeConfig(tuple(frames), sim["cadence"], sim["origin"], tuple(sim["snapshot_times"]))
    dt = None if sim["dt"] == AUTO else sim["dt"]
    return run(model, init, sim["T"], probes, dt=dt, anchor=sim["anchor"])


def headline(report) -> str:
    """Verdict of the slowest band present, the one nearest the climate edge."""
    names = [b.name for b in report.bands]
    for name in ("all", "coexistence", "saturation"):
        if name in names:
            return report[name].verdict
    return "Indeterminate"


def sweep_one(cfg: ScenarioConfig, s: float) -> dict:
    """Simulate and classify at one climate speed; failures become a row, not an exception."""
    try:
        c = cfg.with_speed(s)
        _, series = run_simulation(c)
        report = classify_outcome(series, c.model, speed_report(c.model), thresholds(c))
        return {"s": s, "status": "ok", "verdict": headline(report), "agrees": report.agrees,
                "bands": ";".join(f"{b.name}={b.verdict}" for b in report.bands), "error": ""}
    except Exception as exc:  # noqa: BLE001 - a failed scenario must not stop the sweep
        return {"s": s, "status": "failed", "verdict": "NA", "agrees": False, "bands": "",
                "error": f"{type(exc).__name__}: {exc}"}


def sweep_speeds(cfg: ScenarioConfig) -> list[float]:
    """Climate speeds from ``sweep_s`` or ``sweep_range``; duplicates dropped, order checked."""
    sc = cfg.sections["scenario"]
    values = list(sc["sweep_s"])
    if sc["sweep_range"]:
        if values:
            raise ConfigError("[scenario] give sweep_s or sweep_range, not both")
        try:
            start, stop, count = sc["sweep_range"].split(":")
            values = np.linspace(float(start), float(stop), int(count)).tolist()
        except ValueError:
            raise ConfigError("[scenario] sweep_range must read start:stop:count") from None
    if not values:
        raise ConfigError("sweep needs at least one climate speed")
    if any(not v > 0 for v in values):
        raise ConfigError("climate speed must be positive")
    unique = list(dict.fromkeys(values))
    if len(unique) < len(values):
        dropped = sorted({v for v in values if values.count(v) > 1})
        log.warning("dropping duplicate climate speeds: %s", ", ".join(format(v, "g") for v in dropped))
    steps = np.diff(unique)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise ConfigError("sweep climate speeds must be monotone")
    return unique
