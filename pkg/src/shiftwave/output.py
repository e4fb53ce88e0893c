"""Deterministic CSV emission.

Numbers are written with 12 significant digits, ``.`` as the decimal mark
and ``\\n`` line endings, so identical inputs give byte-identical files.
Missing values are written as ``NA``.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

RESULTS_FILE = "results.csv"
RESULTS_HEADER = ("scenario", "command", "param_hash", "status", "outputs", "wall_time")


def fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "NA"
        if value == 0.0:
            return "0"
        return format(value, ".12g")
    return str(value)


def write_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) for x in row])
    return path


def read_csv(path: Path | str) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    return rows[0], rows[1:]


def pack(mapping: dict) -> str:
    """``key=value`` pairs joined by ``;`` in insertion order."""
    return ";".join(f"{k}={fmt(v)}" for k, v in mapping.items())


@dataclass
class ResultRow:
    scenario: str
    command: str
    param_hash: str
    status: str = "ok"
    outputs: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def cells(self) -> list:
        return [self.scenario, self.command, self.param_hash, self.status, pack(self.outputs),
                format(self.wall_time, ".3f")]


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        self.elapsed = 0.0
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False


def append_result(out_dir: Path | str, row: ResultRow) -> Path:
    """Append one row to ``results.csv``, writing the header on first use."""
    path = Path(out_dir) / RESULTS_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    new = not path.exists()
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if new:
            writer.writerow(RESULTS_HEADER)
        writer.writerow(row.cells())
    return path
