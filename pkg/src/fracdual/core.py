"""Shared types, special functions and grid machinery."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class DomainError(ValueError):
    """Parameter outside the admissible range."""


class PoleError(DomainError):
    """Gamma function evaluated at a nonpositive integer."""


class TailDivergenceError(ArithmeticError):
    """The far-field tail of a singular integral cannot be truncated."""


class NonConvergenceError(ArithmeticError):
    """Quadrature refinement failed to reach the requested accuracy."""


class DivergenceError(ArithmeticError):
    """An improper integral is infinite for the given input."""


class FitDegeneracyError(ArithmeticError):
    """A log-log fit has no usable samples."""


# {{{ gamma


def gamma_fn(x: float) -> float:
    """Gamma function on the real line, reflection formula for ``x < 1/2``."""
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"gamma_fn needs a finite argument, got {x}")
    if x <= 0 and x == math.floor(x):
        raise PoleError(f"gamma_fn has a pole at {x}")
    if x < 0.5:
        # sin(pi x) via the reduced argument keeps the relative error near poles small
        k = math.floor(x)
        r = x - k
        sinpi = math.sin(math.pi * r) * (-1.0 if int(k) % 2 else 1.0)
        return math.pi / (sinpi * math.gamma(1.0 - x))
    return math.gamma(x)


# }}}


# {{{ parameters


@dataclass(frozen=True)
class FractionalParams:
    alpha: float
    s: float
    n: int
    c_upper_alpha: float
    """C_alpha = 1/|Gamma(-alpha)|, prefactor of the Marchaud derivative."""
    c_lower_alpha: float
    """c_alpha = 1/Gamma(alpha), prefactor of the Riemann-Liouville integral."""
    c_ns: float
    """C_{n,s}, normalizes the fractional Laplacian to the symbol |xi|^{2s}."""

    def as_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "s": self.s,
            "n": self.n,
            "c_upper_alpha": self.c_upper_alpha,
            "c_lower_alpha": self.c_lower_alpha,
            "c_ns": self.c_ns,
        }


def fractional_laplacian_constant(n: int, s: float) -> float:
    return (
        4.0**s
        * gamma_fn(n / 2 + s)
        / (math.pi ** (n / 2) * abs(gamma_fn(-s)))
    )


def make_params(alpha: float, s: float, n: int = 1) -> FractionalParams:
    alpha = float(alpha)
    s = float(s)
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not (0.0 < s < 1.0):
        raise DomainError(f"s must lie in (0, 1), got {s}")
    if isinstance(n, bool) or int(n) != n or int(n) not in (1, 2, 3):
        raise DomainError(f"n must be 1, 2 or 3, got {n}")
    n = int(n)

    return FractionalParams(
        alpha=alpha,
        s=s,
        n=n,
        c_upper_alpha=1.0 / abs(gamma_fn(-alpha)),
        c_lower_alpha=1.0 / gamma_fn(alpha),
        c_ns=fractional_laplacian_constant(n, s),
    )


# }}}


# {{{ grids


def _is_power_of_two(k: int) -> bool:
    return k > 0 and (k & (k - 1)) == 0


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Periodic box ``[-L, L)^n`` times the time samples ``t_min + j dt``.

    Time samples exclude ``t_max`` so the time axis is also DFT-compatible.
    """

    half_length_x: float
    points_per_axis: int
    t_min: float
    t_max: float
    t_points: int
    n: int = 1

    def __post_init__(self) -> None:
        if self.points_per_axis < 8 or not _is_power_of_two(self.points_per_axis):
            raise DomainError(
                f"points_per_axis must be a power of two >= 8: {self.points_per_axis}"
            )
        if self.t_points < 8:
            raise DomainError(f"t_points must be >= 8: {self.t_points}")
        if not self.half_length_x > 0:
            raise DomainError("half_length_x must be positive")
        if not self.t_max > self.t_min:
            raise DomainError("t_max must exceed t_min")
        if self.n not in (1, 2, 3):
            raise DomainError(f"n must be 1, 2 or 3, got {self.n}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length_x / self.points_per_axis

    @property
    def dt(self) -> float:
        return (self.t_max - self.t_min) / self.t_points

    @property
    def x(self) -> np.ndarray:
        """One axis of spatial nodes."""
        L, N = self.half_length_x, self.points_per_axis
        return -L + self.dx * np.arange(N)

    @property
    def t(self) -> np.ndarray:
        return self.t_min + self.dt * np.arange(self.t_points)

    @property
    def xi(self) -> np.ndarray:
        """Centered spatial frequencies pi k / L."""
        N = self.points_per_axis
        return np.pi * np.arange(-N // 2, N // 2) / self.half_length_x

    @property
    def rho(self) -> np.ndarray:
        M = self.t_points
        return 2.0 * np.pi * np.arange(-(M // 2), M - M // 2) / (self.t_max - self.t_min)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.n + (self.t_points,)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(x, t)`` with ``x`` of shape ``shape + (n,)``."""
        axes = [self.x] * self.n + [self.t]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack(grids[:-1], axis=-1), grids[-1]

    def frequency_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        axes = [self.xi] * self.n + [self.rho]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack(grids[:-1], axis=-1), grids[-1]


@dataclass(frozen=True)
class SampledField:
    grid: SpaceTimeGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            raise DomainError(
                f"values shape {values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("sampled field contains non-finite entries")
        object.__setattr__(self, "values", values)


def sample(u, grid: SpaceTimeGrid) -> SampledField:
    x, t = grid.mesh()
    return SampledField(grid, np.broadcast_to(u(x, t), grid.shape))


# }}}


# {{{ reports


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: Any
    tolerance: Any
    params: dict[str, Any] = field(default_factory=dict)
    anchor: str = ""
    details: dict[str, Any] = field(default_factory=dict)
    applicable: bool = True


@dataclass
class VerificationReport:
    """Pass/fail record for one claim, possibly aggregating sub-checks."""

    name: str
    passed: bool
    measured: Any
    tolerance: Any
    params: dict[str, Any] = field(default_factory=dict)
    anchor: str = ""
    details: dict[str, Any] = field(default_factory=dict)
    checks: list[CheckResult] = field(default_factory=list)
    applicable: bool = True

    def __bool__(self) -> bool:
        return self.passed


# }}}
