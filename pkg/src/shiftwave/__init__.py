"""Forced waves and spreading dynamics of a predator-prey system in a shifting habitat.

Prey ``u`` and predator ``v`` disperse by a kernel (or by diffusion in local
mode) and grow in a habitat of quality ``alpha(x - s*t)`` that moves at the
climate speed ``s``. The package computes spreading speeds, builds and solves
forced-wave profiles between ordered upper and lower solutions, and simulates
the Cauchy problem with moving-frame verdicts.
"""

from .cauchy import (Field, ProbeConfig, ProbeSeries, SimGrid, classify_outcome, envelope_check, make_initial,
                     run, step)
from .dispersion import (beta_floor, delta_roots, dispersion_delta, linear_speed, local_speed,
                         speed_report)
from .errors import (ConfigError, IntegrationError, ModelError, OverflowGuardError, RegimeError,
                     ShiftwaveError, UndefinedSpeedError)
from .model import (CoexistenceState, HabitatProfile, Kernel, ModelParams, ValidatedModel, coexistence_state,
                    habitat_value, kernel_mgf, validate_model)
from .waves import (ProfilePair, Sandwich, WaveGrid, WaveSolution, apply_P1, apply_P2, build_sandwich_front,
                    build_sandwich_mixed, check_supersub, classify_tails, residual_sup, scalar_forced_wave,
                    solve_wave_monotone, solve_wave_relaxation)

__version__ = "0.1.0"
