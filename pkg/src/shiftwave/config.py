"""INI-style scenario configuration.

Every section is a flat ``key = value`` map. Unknown sections or keys are
rejected, missing keys take the documented defaults below, and the resolved
configuration hashes to a short deterministic fingerprint that is echoed in
result rows.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ConfigError, ShiftwaveError
from .model import HabitatProfile, Kernel, ModelParams, ValidatedModel, validate_model

AUTO = "auto"

# section -> key -> (default, kind, help); kind is one of float, int, str, floats, auto_float
SCHEMA: dict[str, dict[str, tuple]] = {
    "model": {
        "d1": (1.0, "float", "prey dispersal rate (length^2/time)"),
        "d2": (1.0, "float", "predator dispersal rate (length^2/time)"),
        "r1": (1.0, "float", "prey growth rate (1/time)"),
        "r2": (1.0, "float", "predator growth rate (1/time)"),
        "a": (0.4, "float", "predation rate"),
        "b": (2.0, "float", "conversion rate, must exceed 1"),
        "s": (0.5, "float", "climate speed (length/time)"),
        "mode": ("nonlocal", "str", "nonlocal or local"),
    },
    "habitat": {
        "family": ("tanh", "str", "tanh or table"),
        "alpha_minus": (-1.0, "float", "left limit of the habitat quality, negative"),
        "gamma": (1.0, "float", "tanh steepness (1/length)"),
        "file": ("", "str", "two-column table z, alpha (family = table)"),
        "rho": (1.0, "float", "approach rate declared for a table habitat"),
    },
    "kernel.prey": {
        "family": ("raised_cosine", "str", "raised_cosine, uniform or table"),
        "radius": (1.0, "float", "support radius (length)"),
        "samples": (8001, "int", "quadrature nodes on [-radius, radius]"),
        "file": ("", "str", "two-column table y, J(y) (family = table)"),
    },
    "kernel.predator": {
        "family": ("raised_cosine", "str", "raised_cosine, uniform or table"),
        "radius": (1.0, "float", "support radius (length)"),
        "samples": (8001, "int", "quadrature nodes on [-radius, radius]"),
        "file": ("", "str", "two-column table y, J(y) (family = table)"),
    },
    "grid": {
        "z_min": (-200.0, "float", "left end of the wave grid"),
        "z_max": (200.0, "float", "right end of the wave grid"),
        "h": (0.1, "float", "wave grid spacing"),
        "x_min": (AUTO, "auto_float", "left end of the simulation grid, auto = sized by the domain guard"),
        "x_max": (AUTO, "auto_float", "right end of the simulation grid, auto = sized by the domain guard"),
        "dx": (0.1, "float", "simulation grid spacing"),
    },
    "sim": {
        "T": (400.0, "float", "final time"),
        "dt": (AUTO, "auto_float", "time step, auto = stability bound"),
        "cadence": (1.0, "float", "time between probe samples"),
        "initial": ("bump", "str", "bump, pair-of-bumps or front-like"),
        "center": (5.0, "float", "initial data center"),
        "width": (10.0, "float", "initial data width"),
        "amplitude_u": (1.0, "float", "initial prey amplitude, at most 1"),
        "amplitude_v": (0.5, "float", "initial predator amplitude, at most b-1"),
        "anchor": (0.0, "float", "habitat position at t = 0"),
        "origin": (0.0, "float", "position of the moving frames at t = 0"),
        "frames": (AUTO, "floats_or_auto", "probe frame speeds, auto = cover every band"),
        "snapshot_times": ((), "floats", "times of full-field snapshots"),
        "eps_ext": (1e-3, "float", "extinction level"),
        "eps_sat": (0.05, "float", "saturation tolerance"),
        "eps_coex": (0.05, "float", "coexistence tolerance"),
        "band_offset": (0.1, "float", "frame band offset from each speed"),
        "window": (0.2, "float", "final fraction of [0, T] used for verdicts"),
    },
    "scenario": {
        "id": ("default", "str", "scenario identifier"),
        "wave_type": (AUTO, "str", "front, mixed or auto (front when ab < 1)"),
        "solvers": (("monotone",), "strs", "monotone and/or relaxation"),
        "s_relative_to": ("", "str", "speed name; if set, s = that speed + s_offset"),
        "s_offset": (0.0, "float", "offset added to s_relative_to"),
        "tol": (1e-7, "float", "monotone gap tolerance"),
        "maxiter": (200000, "int", "monotone sweep cap"),
        "relax_T": (5000.0, "float", "relaxation time horizon"),
        "relax_tol": (1e-9, "float", "relaxation steady tolerance"),
        "residual_tol": (1e-6, "float", "largest residual accepted as a solved wave"),
        "sweep_s": ((), "floats", "climate speeds for sweep"),
        "sweep_range": ("", "str", "start:stop:count, an alternative to sweep_s"),
        "seed": (0, "int", "random seed for randomized checks"),
    },
}

SPEED_NAMES = ("s_star_prey", "s_star_pred", "s_dstar_prey", "s_dstar_pred", "s_underline", "s_hat")


@dataclass(frozen=True)
class ScenarioConfig:
    sections: dict
    base_dir: Path
    model: ValidatedModel

    def get(self, section: str, key: str):
        return self.sections[section][key]

    @property
    def scenario_id(self) -> str:
        return str(self.sections["scenario"]["id"])

    def fingerprint(self) -> str:
        """Deterministic short hash of the resolved parameters."""
        return param_hash(self.sections)

    def with_speed(self, s: float) -> "ScenarioConfig":
        sections = {k: dict(v) for k, v in self.sections.items()}
        sections["model"]["s"] = float(s)
        sections["scenario"]["s_relative_to"] = ""
        sections["scenario"]["s_offset"] = 0.0
        return ScenarioConfig(sections, self.base_dir, self.model.with_speed(float(s)))


def canonical(value) -> str:
    if isinstance(value, float):
        return format(value, ".12g")
    if isinstance(value, (tuple, list)):
        return ",".join(canonical(v) for v in value)
    return str(value)


def param_hash(sections: dict) -> str:
    lines = [f"[{name}]\n" + "".join(f"{k}={canonical(v)}\n" for k, v in sorted(body.items()))
             for name, body in sorted(sections.items())]
    return hashlib.sha256("".join(lines).encode("utf-8")).hexdigest()[:16]


def _convert(section: str, key: str, raw: str, kind: str):
    raw = raw.strip()
    where = f"[{section}] {key}"
    try:
        if kind == "float":
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError
            return value
        if kind == "int":
            return int(raw)
        if kind == "auto_float":
            return AUTO if raw.lower() == AUTO else float(raw)
        if kind == "floats_or_auto":
            return AUTO if raw.lower() == AUTO else _floats(raw)
        if kind == "floats":
            return _floats(raw)
        if kind == "strs":
            return tuple(x.strip() for x in raw.split(",") if x.strip())
        return raw
    except ValueError:
        raise ConfigError(f"{where}: cannot read {raw!r} as {kind.replace('_', ' ')}") from None


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(x) for x in re.split(r"[,\s]+", raw.strip()) if x)


def _first_line(text: str, section: str, option: str) -> Optional[int]:
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"\[(.+)\]$", stripped)
        if m:
            current = m.group(1).strip()
            continue
        if current == section:
            m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", stripped)
            if m and m.group(1).strip().lower() == option.lower():
                return i
    return None


def _read_ini(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(strict=True, interpolation=None,
                                       comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(text, source="<config>")
    except configparser.DuplicateOptionError as exc:
        first = _first_line(text, exc.section, exc.option)
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}] at lines {first} and {exc.lineno}") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}] at line {exc.lineno}") from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"syntax error at line {exc.lineno}: key outside any section") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"syntax error at line {lineno}: {line.strip()!r}") from None
    return parser


def apply_overrides(sections: dict[str, dict[str, str]], overrides) -> None:
    """Apply ``section.key=value`` strings (``key=value`` alone addresses [model])."""
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        lhs, value = item.split("=", 1)
        lhs = lhs.strip()
        if "." in lhs:
            section, key = lhs.rsplit(".", 1)
        else:
            section, key = "model", lhs
        sections.setdefault(section, {})[key] = value.strip()


def parse_config(text: str, base_dir: Path | str = ".", overrides=()) -> ScenarioConfig:
    """Parse, default and validate a configuration; all failures raise :class:`ConfigError`."""
    parser = _read_ini(text)
    raw: dict[str, dict[str, str]] = {name: dict(parser[name]) for name in parser.sections()}
    apply_overrides(raw, overrides)
    sections: dict[str, dict] = {}
    for name in raw:
        if name not in SCHEMA:
            raise ConfigError(f"unknown section [{name}]; known sections: {', '.join(SCHEMA)}")
    for name, schema in SCHEMA.items():
        given = raw.get(name, {})
        unknown = sorted(set(given) - set(schema))
        if unknown:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(unknown)}")
        body = {}
        for key, (default, kind, _help) in schema.items():
            body[key] = _convert(name, key, given[key], kind) if key in given else default
        sections[name] = body
    base = Path(base_dir)
    model = build_model(sections, base)
    if sections["scenario"]["s_relative_to"]:
        model = _relative_speed(sections, model)
    _check_sim(sections, model)
    return ScenarioConfig(sections, base, model)


def load_config(path: Path | str, overrides=()) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ConfigError(f"config {path} is not UTF-8 text") from None
    return parse_config(text, path.parent, overrides)


def _resolve(base: Path, name: str, what: str) -> Path:
    if not name:
        raise ConfigError(f"{what} family 'table' needs a file")
    path = Path(name)
    if not path.is_absolute():
        path = base / path
    if not path.is_file():
        raise ConfigError(f"{what} table {path} does not exist")
    return path


def _kernel(body: dict, base: Path, what: str) -> Kernel:
    family = body["family"].replace("-", "_")
    if family == "raised_cosine":
        return Kernel.raised_cosine(body["radius"], body["samples"])
    if family == "uniform":
        return Kernel.uniform(body["radius"], body["samples"])
    if family == "table":
        return Kernel.from_file(_resolve(base, body["file"], what))
    raise ConfigError(f"{what}: unknown family {family!r}")


def build_model(sections: dict, base: Path) -> ValidatedModel:
    m = sections["model"]
    if m["mode"] not in ("nonlocal", "local"):
        raise ConfigError(f"[model] mode must be nonlocal or local, got {m['mode']!r}")
    try:
        params = ModelParams(m["d1"], m["d2"], m["r1"], m["r2"], m["a"], m["b"], m["s"], mode=m["mode"])
        hab = sections["habitat"]
        if hab["family"] == "tanh":
            habitat = HabitatProfile.tanh(hab["alpha_minus"], hab["gamma"])
        elif hab["family"] == "table":
            habitat = HabitatProfile.from_file(_resolve(base, hab["file"], "habitat"), rho=hab["rho"])
        else:
            raise ConfigError(f"[habitat] unknown family {hab['family']!r}")
        kernels = None
        if params.mode == "nonlocal":
            kernels = (_kernel(sections["kernel.prey"], base, "prey kernel"),
                       _kernel(sections["kernel.predator"], base, "predator kernel"))
        return validate_model(params, kernels, habitat)
    except ConfigError:
        raise
    except (ShiftwaveError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _relative_speed(sections: dict, model: ValidatedModel) -> ValidatedModel:
    from .dispersion import speed_report

    name = sections["scenario"]["s_relative_to"]
    if name not in SPEED_NAMES:
        raise ConfigError(f"[scenario] s_relative_to must be one of {', '.join(SPEED_NAMES)}")
    entry = speed_report(model)[name]
    if not entry.defined:
        raise ConfigError(f"[scenario] s_relative_to: {name} is undefined ({entry.reason})")
    s = entry.value + sections["scenario"]["s_offset"]
    if not s > 0:
        raise ConfigError("climate speed must be positive")
    sections["model"]["s"] = s
    return model.with_speed(s)


def _check_sim(sections: dict, model: ValidatedModel) -> None:
    sim = sections["sim"]
    if not sim["T"] >= 0:
        raise ConfigError("[sim] T must be nonnegative")
    for key in ("cadence", "width", "band_offset", "eps_ext", "eps_sat", "eps_coex"):
        if not sim[key] > 0:
            raise ConfigError(f"[sim] {key} must be positive")
    if not 0 < sim["window"] <= 1:
        raise ConfigError("[sim] window must lie in (0, 1]")
    g = sections["grid"]
    if not g["h"] > 0 or not g["dx"] > 0:
        raise ConfigError("[grid] spacings must be positive")
    if (g["x_min"] == AUTO) != (g["x_max"] == AUTO):
        raise ConfigError("[grid] give both x_min and x_max or neither")
    for solver in sections["scenario"]["solvers"]:
        if solver not in ("monotone", "relaxation"):
            raise ConfigError(f"[scenario] unknown solver {solver!r}")
    if sections["scenario"]["wave_type"] not in (AUTO, "front", "mixed"):
        raise ConfigError("[scenario] wave_type must be front, mixed or auto")


def describe_schema() -> str:
    """Plain-text listing of every section, key, default and meaning."""
    out = []
    for name, schema in SCHEMA.items():
        out.append(f"[{name}]")
        for key, (default, _kind, help_) in schema.items():
            out.append(f"  {key} = {canonical(default) if default not in ('', ()) else '(empty)'}    # {help_}")
    return "\n".join(out)
