"""Analytic control shapes and their closed-form figures of merit."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bessel import besselj_orders, magic_ratio
from .dynamics import ControlField, SystemParams, constant_propagator

__all__ = [
    "ShapeSpec",
    "render",
    "magic_ratio",
    "magic_sinusoid",
    "switch_time_tstar",
    "square_wave_population_approx",
    "square_wave_population_exact",
    "jacobi_anger_coefficients",
    "grid_for",
]

KINDS = ("constant", "sinusoid", "square_wave", "two_piece")

# sinusoid rendering needs at least this many steps per period
_STEPS_PER_PERIOD = 40


@dataclass(frozen=True)
class ShapeSpec:
    """Description of an analytic detuning w(t).

    constant     w = omega_max
    sinusoid     w = omega_max sin(theta t)
    square_wave  +omega_max on the first half period, -omega_max on the second;
                 period defaults to 4 pi / omega_max
    two_piece    omega_a before t_switch, omega_b after
    """

    kind: str
    omega_max: float = 0.0
    theta: float | None = None
    period: float | None = None
    t_switch: float | None = None
    omega_a: float | None = None
    omega_b: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}; expected one of {KINDS}")
        if not (self.omega_max >= 0 and math.isfinite(self.omega_max)):
            raise ValueError("omega_max must be finite and >= 0")
        if self.kind == "sinusoid" and not (self.theta is not None and self.theta > 0):
            raise ValueError("sinusoid needs theta > 0")
        if self.kind == "square_wave":
            if self.period is None and self.omega_max <= 0:
                raise ValueError("square_wave needs a period or omega_max > 0")
            if self.period is not None and not self.period > 0:
                raise ValueError("square_wave period must be > 0")
        if self.kind == "two_piece":
            if self.t_switch is None or self.t_switch < 0:
                raise ValueError("two_piece needs t_switch >= 0")
            if self.omega_a is None or self.omega_b is None:
                raise ValueError("two_piece needs omega_a and omega_b")
            bound = self.omega_max + 1e-12 * max(1.0, self.omega_max)
            if abs(self.omega_a) > bound or abs(self.omega_b) > bound:
                raise ValueError("two_piece values exceed omega_max")

    @property
    def square_period(self) -> float:
        return self.period if self.period is not None else 4 * math.pi / self.omega_max

    def value(self, t):
        """Shape evaluated at times ``t`` (vectorised)."""
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full(t.shape, self.omega_max)
        if self.kind == "sinusoid":
            return self.omega_max * np.sin(self.theta * t)
        if self.kind == "square_wave":
            phase = np.mod(t, self.square_period) / self.square_period
            return np.where(phase < 0.5, self.omega_max, -self.omega_max)
        return np.where(t < self.t_switch, self.omega_a, self.omega_b)


def magic_sinusoid(omega_max: float) -> ShapeSpec:
    """Sinusoid whose frequency cancels the zeroth Bessel term, J0(omega_max/theta) = 0."""
    return ShapeSpec("sinusoid", omega_max=omega_max, theta=omega_max / magic_ratio())


def grid_for(horizon: float, dt: float) -> tuple[int, float]:
    """Number of steps and the adjusted step that tile ``horizon`` exactly."""
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    n = max(1, int(round(horizon / dt)))
    return n, horizon / n


def render(shape: ShapeSpec, dt: float, horizon: float) -> ControlField:
    """Sample ``shape`` at step midpoints on a uniform grid covering ``horizon``.

    The step is adjusted so that an integer number of steps fills the horizon.
    Sinusoids are refined to at least 40 steps per period, with a warning.
    """
    if shape.kind == "sinusoid":
        max_dt = 2 * math.pi / shape.theta / _STEPS_PER_PERIOD
        if dt > max_dt * (1 + 1e-12):
            warnings.warn(
                f"dt={dt:g} under-resolves the sinusoid (period {2 * math.pi / shape.theta:g}); "
                f"refining to {max_dt:g}",
                stacklevel=2,
            )
            dt = max_dt
            n = max(1, int(math.ceil(horizon / dt - 1e-9)))
            dt = horizon / n
    n, dt = grid_for(horizon, dt)
    mid = (np.arange(n) + 0.5) * dt
    samples = np.clip(shape.value(mid), -shape.omega_max, shape.omega_max)
    return ControlField(dt, samples, omega_max=shape.omega_max)


def switch_time_tstar(params: SystemParams) -> float:
    """First maximum of |U12(0, t)|^2, the switch time of the two-piece protocols."""
    p, q = params.p, params.q
    if 2 * p <= q:
        raise ValueError("no oscillatory maximum: needs strong coupling 2p > q")
    im_omega = math.sqrt(4 * p * p - q * q)
    return 2.0 / im_omega * math.acos(q / math.sqrt(q * q + im_omega**2))


def square_wave_population_approx(params: SystemParams, omega_max: float, period: float) -> float:
    """Large-amplitude approximation of c1(T) after one square-wave period from (1, 0).

    Only meaningful for omega_max >> q, p; evaluated regardless.
    """
    p, q = params.p, params.q
    big_omega_sq = abs((q - 1j * omega_max) ** 2 - 4 * p * p)
    half = 0.5 * q * period
    bracket = math.exp(-half) * (math.cosh(half) - math.cos(0.5 * omega_max * period))
    return 1.0 - 2.0 * p * p / big_omega_sq * bracket


def square_wave_population_exact(params: SystemParams, omega_max: float, period: float) -> complex:
    """c1(T) after one period (+omega_max then -omega_max) starting from (1, 0)."""
    first = constant_propagator(params, omega_max, 0.5 * period)
    second = constant_propagator(params, -omega_max, 0.5 * period)
    return second.u11 * first.u11 - second.u12 * first.u12


def jacobi_anger_coefficients(x: float, n_max: int) -> np.ndarray:
    """Coefficients a_n with exp(i x cos(phi)) = sum_n a_n cos(n phi).

    a_0 = J0(x) and a_n = 2 i^n J_n(x) for n >= 1.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    j = besselj_orders(n_max, x).astype(complex)
    coeffs = 2.0 * (1j ** np.arange(n_max + 1)) * j
    coeffs[0] = j[0]
    return coeffs
