"""Command line interface: ``shiftwave speeds|wave|simulate|classify|sweep|accept``.

Exit codes: 0 success, 2 configuration or regime error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .cauchy import ProbeSeries, classify_outcome
from .config import ScenarioConfig, describe_schema, load_config
from .dispersion import speed_report
from .errors import ConfigError, ModelError, RegimeError, ShiftwaveError
from .output import ResultRow, Timer, append_result, fmt, pack, read_csv, write_csv
from .scenarios import local_residual, run_simulation, run_wave, sweep_one, sweep_speeds, thresholds

log = logging.getLogger("shiftwave")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

SPEEDS_HEADER = ("name", "value", "lambda_argmin", "reason")
PROFILE_HEADER = ("z", "phi", "psi", "residual_local")
PROBES_HEADER = ("t", "frame_speed", "u", "v", "u_plus_v")
SNAPSHOT_HEADER = ("t", "x", "u", "v")
OUTCOME_HEADER = ("band", "lo", "hi", "verdict", "expected", "agrees", "levels", "reason")
SWEEP_HEADER = ("s", "status", "verdict", "agrees", "bands", "error")
MAX_ROW = "max"


def _row(cfg: ScenarioConfig, command: str) -> ResultRow:
    return ResultRow(cfg.scenario_id, command, cfg.fingerprint())


# --------------------------------------------------------------------------
# speeds
# --------------------------------------------------------------------------

def cmd_speeds(cfg: ScenarioConfig, out: Path) -> tuple[int, ResultRow]:
    row = _row(cfg, "speeds")
    with Timer() as timer:
        report = speed_report(cfg.model)
        write_csv(out / "speeds.csv", SPEEDS_HEADER,
                  ([e.name, e.value, e.lam, e.reason if not e.defined else ""] for e in report.entries()))
    for e in report.entries():
        print(f"{e.name:14s} {fmt(e.value):>16s}  {e.reason if not e.defined else ''}")
    row.outputs = {e.name: e.value for e in report.entries()}
    row.wall_time = timer.elapsed
    return EXIT_OK, row


# --------------------------------------------------------------------------
# wave
# --------------------------------------------------------------------------

def cmd_wave(cfg: ScenarioConfig, out: Path) -> tuple[int, ResultRow]:
    row = _row(cfg, "wave")
    model = cfg.model
    s = model.params.s
    tol = cfg.get("scenario", "residual_tol")
    with Timer() as timer:
        result = run_wave(cfg)
        summary = []
        ok = True
        for i, (name, sol) in enumerate(result.solutions.items()):
            res = local_residual(sol, model, s)
            fname = "wave_profile.csv" if i == 0 else f"wave_profile_{name}.csv"
            write_csv(out / fname, PROFILE_HEADER, zip(sol.pair.grid.z, sol.pair.phi, sol.pair.psi, res))
            good = sol.status == "converged" and sol.tail == result.expected_tail and sol.residual < tol
            ok &= good
            summary.append([name, sol.iterations, sol.status, sol.residual, sol.gap, sol.tail,
                            result.expected_tail, good])
        write_csv(out / "wave_summary.csv",
                  ("method", "iterations", "status", "residual", "gap", "tail", "expected_tail", "ok"), summary)
        write_csv(out / "sandwich.csv", ("key", "value"),
                  [["kind", result.sandwich.kind], ["supersub_passed", result.supersub.passed]]
                  + [[f"slack_{k}", v] for k, v in result.supersub.slacks.items()]
                  + [[k, v] for k, v in result.sandwich.params.items()])
    for line in summary:
        print(f"method={line[0]} iterations={line[1]} status={line[2]} residual={fmt(line[3])} "
              f"tail={line[5]} sandwich={result.sandwich.kind} {pack(result.sandwich.params)}")
    row.outputs = {"wave_type": result.wave_type, "supersub": result.supersub.passed,
                   **{f"{k}_tail": v.tail for k, v in result.solutions.items()},
                   **{f"{k}_residual": v.residual for k, v in result.solutions.items()}}
    row.wall_time = timer.elapsed
    if not ok:
        row.status = "failed"
        return EXIT_NUMERIC, row
    return EXIT_OK, row


# --------------------------------------------------------------------------
# simulate / classify
# --------------------------------------------------------------------------

def probe_rows(series: ProbeSeries):
    for k, t in enumerate(series.times):
        for j, c in enumerate(series.frames):
            u, v = series.u[k, j], series.v[k, j]
            yield [t, c, u, v, u + v]
        yield [t, MAX_ROW, series.sup_u[k], series.sup_v[k], series.sup_sum[k]]


def read_probes(path: Path | str) -> ProbeSeries:
    """Rebuild a :class:`ProbeSeries` from a probe CSV (without snapshots)."""
    try:
        header, rows = read_csv(path)
    except OSError as exc:
        raise ConfigError(f"cannot read probes {path}: {exc.strerror}") from None
    if tuple(header) != PROBES_HEADER:
        raise ConfigError(f"{path}: expected columns {','.join(PROBES_HEADER)}")
    times, frames = [], []
    u, v, maxima = {}, {}, {}
    for r in rows:
        t = float(r[0])
        if not times or times[-1] != t:
            times.append(t)
        if r[1] == MAX_ROW:
            maxima[t] = (float(r[2]), float(r[3]), float(r[4]))
            continue
        c = float(r[1])
        if c not in frames:
            frames.append(c)
        u[(t, c)], v[(t, c)] = float(r[2]), float(r[3])
    try:
        uu = np.array([[u[(t, c)] for c in frames] for t in times]).reshape(len(times), len(frames))
        vv = np.array([[v[(t, c)] for c in frames] for t in times]).reshape(len(times), len(frames))
        sup = np.array([maxima[t] for t in times]).reshape(-1, 3)
    except KeyError as exc:
        raise ConfigError(f"{path}: incomplete probe table ({exc})") from None
    return ProbeSeries(np.array(frames), np.array(times), uu, vv, sup[:, 0], sup[:, 1], sup[:, 2])


def cmd_simulate(cfg: ScenarioConfig, out: Path) -> tuple[int, ResultRow]:
    row = _row(cfg, "simulate")
    with Timer() as timer:
        final, series = run_simulation(cfg)
        write_csv(out / "probes.csv", PROBES_HEADER, probe_rows(series))
        if series.snapshots:
            write_csv(out / "snapshots.csv", SNAPSHOT_HEADER,
                      ([f.t, x, a, b] for f in series.snapshots for x, a, b in zip(f.x, f.u, f.v)))
    print(f"simulated to t={fmt(final.t)} on {final.n} nodes; {series.times.size} probe samples")
    row.outputs = {"t_final": final.t, "nodes": final.n, "sup_u": float(series.sup_u[-1]),
                   "sup_v": float(series.sup_v[-1])}
    row.wall_time = timer.elapsed
    return EXIT_OK, row


def cmd_classify(cfg: ScenarioConfig, out: Path, probes: Optional[Path] = None) -> tuple[int, ResultRow]:
    row = _row(cfg, "classify")
    probes = probes or out / "probes.csv"
    with Timer() as timer:
        series = read_probes(probes)
        report = classify_outcome(series, cfg.model, speed_report(cfg.model), thresholds(cfg))
        write_csv(out / "outcome.csv", OUTCOME_HEADER,
                  ([b.name, b.lo, b.hi, b.verdict, b.expected, b.agrees, pack(b.levels), b.reason]
                   for b in report.bands))
    for b in report.bands:
        mark = "agrees" if b.agrees else f"expected {b.expected}"
        print(f"{b.name:12s} ({fmt(b.lo)}, {fmt(b.hi)}): {b.verdict} [{mark}] {pack(b.levels)}")
    row.outputs = {b.name: b.verdict for b in report.bands}
    row.wall_time = timer.elapsed
    return EXIT_OK, row


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------

def worker_count() -> int:
    raw = os.environ.get("SHIFTWAVE_THREADS", "")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"SHIFTWAVE_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def cmd_sweep(cfg: ScenarioConfig, out: Path) -> tuple[int, ResultRow]:
    row = _row(cfg, "sweep")
    speeds = sweep_speeds(cfg)
    workers = min(worker_count(), len(speeds))
    with Timer() as timer:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(sweep_one, [cfg] * len(speeds), speeds))
        else:
            rows = [sweep_one(cfg, s) for s in speeds]
        write_csv(out / "sweep.csv", SWEEP_HEADER, ([r[k] for k in SWEEP_HEADER] for r in rows))
    for r in rows:
        print(f"s={fmt(r['s'])}: {r['verdict']} {r['bands']} {r['error']}")
    failed = [r for r in rows if r["status"] != "ok"]
    row.outputs = {f"s={fmt(r['s'])}": r["verdict"] for r in rows}
    row.wall_time = timer.elapsed
    if failed:
        row.status = "failed"
        return EXIT_NUMERIC, row
    return EXIT_OK, row


# --------------------------------------------------------------------------
# accept
# --------------------------------------------------------------------------

def cmd_accept(config_dir: Optional[Path], out: Path, scale: float = 1.0,
               only: Optional[Sequence[int]] = None) -> int:
    from .acceptance import run_acceptance, write_summary

    results = run_acceptance(config_dir, scale=scale, only=only)
    for r in results:
        print(r.line())
    write_summary(out / "acceptance.csv", results)
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

COMMANDS = ("speeds", "wave", "simulate", "classify", "sweep", "accept")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shiftwave", description=__doc__.splitlines()[0])
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="scenario INI file (all commands except accept)")
    parser.add_argument("--config-dir", type=Path, help="acceptance config directory (accept only)")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    parser.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value; a bare KEY addresses [model]")
    parser.add_argument("--probes", type=Path, help="probe CSV for classify (default: OUT/probes.csv)")
    parser.add_argument("--tolerance-scale", type=float, default=1.0,
                        help="multiply acceptance tolerances (0.1 = ten times stricter)")
    parser.add_argument("--only", type=int, nargs="*", help="acceptance criteria to run")
    parser.add_argument("--schema", action="store_true", help="print the configuration keys and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.schema:
        print(describe_schema())
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    out = args.out
    try:
        if args.command == "accept":
            return cmd_accept(args.config_dir, out, args.tolerance_scale, args.only)
        if args.config is None:
            raise ConfigError(f"{args.command} needs --config")
        cfg = load_config(args.config, args.override)
        if args.command == "classify":
            code, row = cmd_classify(cfg, out, args.probes)
        else:
            code, row = {"speeds": cmd_speeds, "wave": cmd_wave, "simulate": cmd_simulate,
                         "sweep": cmd_sweep}[args.command](cfg, out)
        append_result(out, row)
        return code
    except (ConfigError, RegimeError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ShiftwaveError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
