"""Model data: parameters, dispersal kernels, habitat profiles.

Everything here is immutable once built. ``validate_model`` is the single
entry point that bundles the pieces and re-checks every invariant.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional

import numpy as np

from .errors import ModelError, OverflowGuardError

Mode = Literal["nonlocal", "local"]

NORMALIZATION_TOL = 1e-12
SYMMETRY_TOL = 1e-12
MGF_OVERFLOW = 700.0
DEFAULT_KERNEL_SAMPLES = 8001


@dataclass(frozen=True)
class ModelParams:
    """The seven positive constants of the predator-prey system plus the dispersal mode."""

    d1: float
    d2: float
    r1: float
    r2: float
    a: float
    b: float
    s: float
    mode: Mode = "nonlocal"

    def __post_init__(self):
        for name in ("d1", "d2", "r1", "r2", "a", "b"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ModelError(f"{name} must be positive, got {value!r}")
        if not (np.isfinite(self.s) and self.s > 0):
            raise ModelError(f"climate speed must be positive, got s={self.s!r}")
        if self.mode not in ("nonlocal", "local"):
            raise ModelError(f"mode must be 'nonlocal' or 'local', got {self.mode!r}")

    @property
    def front_regime(self) -> bool:
        return self.a * self.b < 1.0

    @property
    def s_star_defined(self) -> bool:
        return self.b > 1.0

    def with_speed(self, s: float) -> "ModelParams":
        return dataclasses.replace(self, s=s)


@dataclass(frozen=True)
class CoexistenceState:
    u_star: float
    v_star: float


def coexistence_state(a: float, b: float) -> CoexistenceState:
    """Positive constant equilibrium of the homogeneous system (habitat level 1)."""
    if not b > 1.0:
        raise ModelError(f"b must exceed 1 for a coexistence state, got b={b!r}")
    denom = 1.0 + a * b
    return CoexistenceState((1.0 + a) / denom, (b - 1.0) / denom)


def read_table(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column whitespace table; ``#`` starts a comment."""
    rows = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ModelError(f"{path}:{lineno}: expected two columns, got {len(parts)}")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ModelError(f"{path}:{lineno}: {exc}") from None
    if len(rows) < 2:
        raise ModelError(f"{path}: table needs at least two rows")
    arr = np.asarray(rows, dtype=float)
    return arr[:, 0].copy(), arr[:, 1].copy()


# --------------------------------------------------------------------------
# Kernels
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Kernel:
    """Compactly supported, even, normalized dispersal kernel on ``[-radius, radius]``.

    ``nodes``/``values`` form the native quadrature grid used for every
    moment (composite trapezoid). Analytic families also keep their closed
    form so that resampling onto a spatial grid is exact at the nodes.
    """

    radius: float
    nodes: np.ndarray
    values: np.ndarray
    family: str

    @classmethod
    def raised_cosine(cls, radius: float = 1.0, samples: int = DEFAULT_KERNEL_SAMPLES) -> "Kernel":
        nodes = _symmetric_nodes(radius, samples)
        return cls(radius, nodes, _raised_cosine(nodes, radius), "raised-cosine")

    @classmethod
    def uniform(cls, radius: float = 1.0, samples: int = DEFAULT_KERNEL_SAMPLES) -> "Kernel":
        nodes = _symmetric_nodes(radius, samples)
        return cls(radius, nodes, np.full_like(nodes, 0.5 / radius), "uniform")

    @classmethod
    def from_table(cls, y, values, normalize: bool = False) -> "Kernel":
        y = np.asarray(y, dtype=float)
        values = np.asarray(values, dtype=float)
        if y.shape != values.shape or y.ndim != 1:
            raise ModelError("kernel table columns must be 1-D and of equal length")
        if np.any(np.diff(y) <= 0):
            raise ModelError("kernel table nodes must be strictly increasing")
        if normalize:
            values = values / np.trapezoid(values, y)
        radius = float(max(-y[0], y[-1]))
        return cls(radius, y, values, "table")

    @classmethod
    def from_file(cls, path: str | Path, normalize: bool = False) -> "Kernel":
        return cls.from_table(*read_table(path), normalize=normalize)

    @property
    def continuous(self) -> bool:
        """False for the uniform kernel, which jumps at the support edges."""
        return self.family != "uniform"

    def value(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.family == "raised-cosine":
            return _raised_cosine(y, self.radius)
        if self.family == "uniform":
            return np.where(np.abs(y) <= self.radius, 0.5 / self.radius, 0.0)
        return np.interp(y, self.nodes, self.values, left=0.0, right=0.0)

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.nodes))

    def second_moment(self) -> float:
        return float(np.trapezoid(self.values * self.nodes**2, self.nodes))

    def check(self) -> None:
        """Raise ModelError unless the kernel is nonnegative, normalized and even."""
        if np.any(self.values < 0):
            raise ModelError("kernel must be nonnegative")
        total = self.integral()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ModelError(f"kernel normalization failed: integral = {total:.12g}, expected 1")
        if not np.allclose(self.nodes, -self.nodes[::-1], rtol=0.0, atol=1e-12 * max(self.radius, 1.0)):
            raise ModelError("kernel nodes must be symmetric about 0")
        if np.max(np.abs(self.values - self.values[::-1])) > SYMMETRY_TOL:
            raise ModelError("kernel symmetry failed: J(y) != J(-y)")

    def weights(self, h: float) -> np.ndarray:
        """Convolution weights at offsets ``k*h``, ``|k*h| <= radius``, summing to 1.

        Trapezoid weights of the kernel sampled at the grid offsets, rescaled
        so that constants are preserved exactly by the discrete operator.
        """
        half = int(math.floor(self.radius / h + 1e-9))
        if half < 1:
            raise ModelError(f"grid spacing h={h} does not resolve kernel radius {self.radius}")
        offsets = h * np.arange(-half, half + 1)
        w = self.value(offsets) * h
        if abs(half * h - self.radius) <= 1e-9 * self.radius:
            w[0] *= 0.5
            w[-1] *= 0.5
        total = w.sum()
        if total <= 0:
            raise ModelError("kernel has no mass on the grid offsets")
        w = w / total
        return 0.5 * (w + w[::-1])


def _symmetric_nodes(radius: float, samples: int) -> np.ndarray:
    if radius <= 0:
        raise ModelError(f"kernel radius must be positive, got {radius!r}")
    if samples < 3 or samples % 2 == 0:
        raise ModelError("kernel sample count must be odd and at least 3")
    nodes = np.linspace(-radius, radius, samples)
    return 0.5 * (nodes - nodes[::-1])


def _raised_cosine(y, radius):
    y = np.asarray(y, dtype=float)
    inside = np.abs(y) <= radius
    return np.where(inside, (1.0 + np.cos(np.pi * y / radius)) / (2.0 * radius), 0.0)


def kernel_mgf(kernel: Kernel, lam) -> float | np.ndarray:
    """Exponential moment of the kernel, by trapezoid on its native grid."""
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(np.abs(lam_arr) * kernel.radius > MGF_OVERFLOW):
        raise OverflowGuardError(
            f"|lambda|*tau exceeds {MGF_OVERFLOW:g} (lambda={np.max(np.abs(lam_arr)):.6g})"
        )
    if lam_arr.ndim == 0:
        return float(np.trapezoid(kernel.values * np.exp(float(lam_arr) * kernel.nodes), kernel.nodes))
    integrand = kernel.values * np.exp(np.multiply.outer(lam_arr, kernel.nodes))
    return np.trapezoid(integrand, kernel.nodes, axis=-1)


# --------------------------------------------------------------------------
# Habitat
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HabitatProfile:
    """Nondecreasing climate profile with ``alpha(-inf) = alpha_minus < 0`` and ``alpha(inf) = 1``.

    ``C`` and ``rho`` bound the approach to 1: ``1 - alpha(z) <= C exp(-rho z)``
    for ``z >= 0``.
    """

    alpha_minus: float
    gamma: float
    C: float
    rho: float
    family: str = "tanh"
    table_z: Optional[np.ndarray] = field(default=None, repr=False)
    table_values: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def tanh(cls, alpha_minus: float = -1.0, gamma: float = 1.0) -> "HabitatProfile":
        if not alpha_minus < 0:
            raise ModelError(f"alpha(-inf) must be negative, got {alpha_minus!r}")
        if not gamma > 0:
            raise ModelError(f"habitat steepness must be positive, got {gamma!r}")
        return cls(alpha_minus, gamma, C=1.0 - alpha_minus, rho=2.0 * gamma)

    @classmethod
    def from_table(cls, z, values, rho: float = 1.0) -> "HabitatProfile":
        z = np.asarray(z, dtype=float)
        values = np.asarray(values, dtype=float)
        if z.shape != values.shape or z.ndim != 1 or z.size < 2:
            raise ModelError("habitat table columns must be 1-D and of equal length")
        if np.any(np.diff(z) <= 0):
            raise ModelError("habitat table abscissae must be strictly increasing")
        if np.any(np.diff(values) < 0):
            raise ModelError("habitat table must be nondecreasing")
        if not values[0] < 0:
            raise ModelError("habitat table must start below zero (alpha(-inf) < 0)")
        if abs(values[-1] - 1.0) > 1e-9:
            raise ModelError("habitat table must end at 1 (alpha(inf) = 1)")
        pos = z >= 0
        zz = np.concatenate(([0.0], z[pos]))
        gap = 1.0 - np.interp(zz, z, values)
        C = float(max(np.max(gap * np.exp(rho * zz)), 1e-300))
        return cls(float(values[0]), gamma=float("nan"), C=C, rho=rho, family="table",
                   table_z=z, table_values=values)

    @classmethod
    def from_file(cls, path: str | Path, rho: float = 1.0) -> "HabitatProfile":
        return cls.from_table(*read_table(path), rho=rho)

    @classmethod
    def homogeneous(cls) -> "HabitatProfile":
        """Constant habitat ``alpha == 1``; rejected by validate_model, for exact-solution checks."""
        return cls(1.0, gamma=0.0, C=1.0, rho=1.0, family="constant")

    def __call__(self, z):
        return habitat_value(self, z)


def habitat_value(profile: HabitatProfile, z):
    """Evaluate the habitat profile; total on the reals, vectorized."""
    if profile.family == "table":
        out = np.interp(z, profile.table_z, profile.table_values)
    elif profile.family == "constant":
        out = np.full(np.shape(z), 1.0)
    else:
        out = 1.0 + 0.5 * (1.0 - profile.alpha_minus) * (np.tanh(profile.gamma * np.asarray(z, dtype=float)) - 1.0)
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# Validated bundle
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ValidatedModel:
    params: ModelParams
    habitat: HabitatProfile
    kernels: Optional[tuple[Kernel, Kernel]] = None
    notes: tuple[str, ...] = ()

    @property
    def local(self) -> bool:
        return self.params.mode == "local"

    @property
    def front_regime(self) -> bool:
        return self.params.front_regime

    @property
    def kernel_prey(self) -> Optional[Kernel]:
        return None if self.kernels is None else self.kernels[0]

    @property
    def kernel_pred(self) -> Optional[Kernel]:
        return None if self.kernels is None else self.kernels[1]

    @property
    def coexistence(self) -> CoexistenceState:
        p = self.params
        return coexistence_state(p.a, p.b)

    @property
    def max_radius(self) -> float:
        if self.kernels is None:
            return 0.0
        return max(k.radius for k in self.kernels)

    def with_speed(self, s: float) -> "ValidatedModel":
        return dataclasses.replace(self, params=self.params.with_speed(s))


def validate_model(params: ModelParams, kernels, habitat: HabitatProfile) -> ValidatedModel:
    """Bundle and re-check model data; raises ModelError on any violated invariant."""
    if not isinstance(params, ModelParams):
        raise ModelError("params must be a ModelParams instance")
    # __post_init__ already enforced positivity; re-check in case of object.__setattr__ tricks
    ModelParams(**dataclasses.asdict(params))
    if not params.b > 1.0:
        raise ModelError(
            f"b must exceed 1 (b={params.b!r}); the predator needs b > 1 to grow on saturated prey"
        )
    notes = []
    if params.mode == "nonlocal":
        if kernels is None or len(kernels) != 2:
            raise ModelError("nonlocal mode needs a (prey, predator) kernel pair")
        for label, k in zip(("prey", "predator"), kernels):
            try:
                k.check()
            except ModelError as exc:
                raise ModelError(f"{label} kernel: {exc}") from None
            if not k.continuous:
                notes.append(f"{label} kernel is uniform: discontinuous at the support edge (test-only)")
        kernels = tuple(kernels)
    else:
        kernels = None
    _check_habitat(habitat)
    return ValidatedModel(params, habitat, kernels, tuple(notes))


def _check_habitat(habitat: HabitatProfile) -> None:
    if not habitat.alpha_minus < 0:
        raise ModelError("habitat must satisfy alpha(-inf) < 0")
    if not (habitat.C > 0 and habitat.rho > 0):
        raise ModelError("habitat approach constants C, rho must be positive")
    if habitat.family == "table":
        vals = habitat.table_values
        if np.any(np.diff(vals) < 0):
            raise ModelError("habitat table must be nondecreasing")
    else:
        z = np.linspace(-60.0 / habitat.gamma, 60.0 / habitat.gamma, 2001)
        if np.any(np.diff(habitat_value(habitat, z)) < 0):
            raise ModelError("habitat profile must be nondecreasing")
