"""Reduced qubit / effective-mode dynamics for a Lorentzian bath.

The qubit amplitude ``c1`` and the effective-mode amplitude ``y`` obey the
linear system

    d/dt (c1, y) = [[-i w(t), -p], [p, -q]] (c1, y)

in the frame rotating at the bath centre frequency, with ``w`` the detuning.
For a piecewise-constant detuning each step is propagated exactly by the
closed-form 2x2 exponential, so the only discretisation is that of the field.
Times are in units of 1/q and frequencies in units of q unless the caller
picks another ``q``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

__all__ = [
    "SystemParams",
    "MultiModeParams",
    "ReducedState",
    "MultiModeState",
    "Matrix2",
    "ControlField",
    "Trajectory",
    "MultiModeTrajectory",
    "spectral_density",
    "correlation_kernel",
    "constant_propagator",
    "step_propagators",
    "propagate",
    "final_state",
    "accumulated_propagator",
    "propagate_multimode",
    "det_of_propagator",
    "rk4_reference",
    "rk4_propagator_batch",
    "weak_coupling_population",
    "CASE1",
    "CASE2",
]

# |z| below which sinh(z)/z is taken from its Taylor series
_SERIES_CUTOFF = 1e-6


@dataclass(frozen=True)
class SystemParams:
    """Bath and coupling constants of a single Lorentzian mode.

    ``p`` is the effective coupling, ``q`` the Lorentzian half width and
    ``omega_c`` the bath centre frequency (kept for reporting only, all
    dynamics run in the detuning frame).
    """

    p: float
    q: float = 1.0
    omega_c: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p >= 0):
            raise ValueError(f"coupling p must be finite and >= 0, got {self.p}")
        if not (math.isfinite(self.q) and self.q > 0):
            raise ValueError(f"width q must be finite and > 0, got {self.q}")
        if not math.isfinite(self.omega_c):
            raise ValueError("omega_c must be finite")

    @property
    def gamma(self) -> float:
        """Effective coupling strength of the spectral density, 2 p^2 / q."""
        return 2.0 * self.p**2 / self.q

    @property
    def strong_coupling(self) -> bool:
        return 2.0 * self.p > self.q

    def scaled(self, factor: float) -> "SystemParams":
        """Same bath with the coupling multiplied by ``factor``."""
        return SystemParams(self.p * factor, self.q, self.omega_c)


@dataclass(frozen=True)
class MultiModeParams:
    """Bath made of N Lorentzians sharing the centre frequency."""

    modes: tuple[tuple[float, float], ...]
    omega_c: float = 0.0

    def __post_init__(self):
        modes = tuple((float(p), float(q)) for p, q in self.modes)
        if not modes:
            raise ValueError("at least one Lorentzian mode is required")
        for p, q in modes:
            if p < 0 or q <= 0 or not (math.isfinite(p) and math.isfinite(q)):
                raise ValueError(f"invalid mode (p={p}, q={q})")
        object.__setattr__(self, "modes", modes)

    @classmethod
    def from_single(cls, params: SystemParams) -> "MultiModeParams":
        return cls(((params.p, params.q),), params.omega_c)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def generator(self, omega: float) -> np.ndarray:
        """(N+1)x(N+1) generator for a constant detuning ``omega``."""
        n = self.n_modes
        m = np.zeros((n + 1, n + 1), dtype=complex)
        m[0, 0] = -1j * omega
        for k, (p, q) in enumerate(self.modes, start=1):
            m[0, k] = -p
            m[k, 0] = p
            m[k, k] = -q
        return m


@dataclass(frozen=True)
class ReducedState:
    c1: complex
    y: complex = 0j

    @property
    def pop(self) -> float:
        """Excited-state population |c1|^2."""
        return abs(self.c1) ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.y], dtype=complex)

    @classmethod
    def from_array(cls, v) -> "ReducedState":
        return cls(complex(v[0]), complex(v[1]))


CASE1 = ReducedState(1.0 + 0j, 0j)  # excited qubit, empty bath
CASE2 = ReducedState(0j, 1.0 + 0j)  # ground qubit, one excitation in the mode


@dataclass(frozen=True)
class MultiModeState:
    c1: complex
    y: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "y", tuple(complex(v) for v in self.y))

    @property
    def pop(self) -> float:
        return abs(self.c1) ** 2

    def as_array(self) -> np.ndarray:
        return np.array((self.c1, *self.y), dtype=complex)

    @classmethod
    def from_array(cls, v) -> "MultiModeState":
        return cls(complex(v[0]), tuple(complex(x) for x in v[1:]))


@dataclass(frozen=True)
class Matrix2:
    u11: complex
    u12: complex
    u21: complex
    u22: complex

    @classmethod
    def from_array(cls, a) -> "Matrix2":
        return cls(complex(a[0, 0]), complex(a[0, 1]), complex(a[1, 0]), complex(a[1, 1]))

    def as_array(self) -> np.ndarray:
        return np.array([[self.u11, self.u12], [self.u21, self.u22]], dtype=complex)

    @property
    def det(self) -> complex:
        return self.u11 * self.u22 - self.u12 * self.u21

    def __matmul__(self, other):
        if isinstance(other, Matrix2):
            return Matrix2.from_array(self.as_array() @ other.as_array())
        if isinstance(other, ReducedState):
            return ReducedState.from_array(self.as_array() @ other.as_array())
        return NotImplemented


@dataclass(frozen=True)
class ControlField:
    """Piecewise-constant detuning; sample k holds on [k dt, (k+1) dt).

    ``omega_max`` is an optional amplitude bound checked at construction.
    """

    dt: float
    samples: np.ndarray
    omega_max: float | None = None

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float).reshape(-1)
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"step dt must be > 0, got {self.dt}")
        if samples.size == 0:
            raise ValueError("a control field needs at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ValueError("control samples must be finite")
        if self.omega_max is not None:
            if self.omega_max < 0:
                raise ValueError("omega_max must be >= 0")
            if np.any(np.abs(samples) > self.omega_max):
                raise ValueError(
                    f"field exceeds its bound: max |w| = {np.abs(samples).max()} > {self.omega_max}"
                )
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @classmethod
    def constant(cls, omega: float, dt: float, n_steps: int, omega_max=None) -> "ControlField":
        return cls(dt, np.full(n_steps, float(omega)), omega_max)

    @property
    def n_steps(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        """Step boundaries 0, dt, ..., n dt."""
        return np.arange(self.n_steps + 1) * self.dt

    def phase_integral(self) -> np.ndarray:
        """Running integral W(t) of the detuning at every step boundary."""
        return np.concatenate(([0.0], np.cumsum(self.samples) * self.dt))

    def with_samples(self, samples) -> "ControlField":
        return ControlField(self.dt, samples, self.omega_max)

    def refined(self, factor: int) -> "ControlField":
        """Split every step into ``factor`` equal sub-steps (same dynamics)."""
        if factor < 1:
            raise ValueError("refinement factor must be >= 1")
        return ControlField(self.dt / factor, np.repeat(self.samples, factor), self.omega_max)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    c1: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if not (len(self.times) == len(self.c1) == len(self.y)):
            raise ValueError("times and states differ in length")

    @property
    def pop(self) -> np.ndarray:
        return np.abs(self.c1) ** 2

    @property
    def states(self) -> list[ReducedState]:
        return [ReducedState(complex(a), complex(b)) for a, b in zip(self.c1, self.y)]

    @property
    def final(self) -> ReducedState:
        return ReducedState(complex(self.c1[-1]), complex(self.y[-1]))

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class MultiModeTrajectory:
    times: np.ndarray
    amplitudes: np.ndarray  # shape (len(times), N+1); column 0 is c1

    @property
    def c1(self) -> np.ndarray:
        return self.amplitudes[:, 0]

    @property
    def pop(self) -> np.ndarray:
        return np.abs(self.c1) ** 2

    @property
    def states(self) -> list[MultiModeState]:
        return [MultiModeState.from_array(row) for row in self.amplitudes]


def spectral_density(params: SystemParams, omega):
    """Lorentzian spectral density (gamma / 2 pi) q^2 / ((w - w_c)^2 + q^2)."""
    q = params.q
    omega = np.asarray(omega, dtype=float)
    out = params.gamma / (2 * np.pi) * q**2 / ((omega - params.omega_c) ** 2 + q**2)
    return out if out.ndim else float(out)


def correlation_kernel(params: SystemParams, tau):
    """Bath correlation function p^2 exp(-q|tau| - i w_c tau)."""
    tau = np.asarray(tau, dtype=float)
    out = params.p**2 * np.exp(-params.q * np.abs(tau) - 1j * params.omega_c * tau)
    return out if out.ndim else complex(out)


def _sinhc(z):
    """sinh(z)/z for complex arrays, exact at z = 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, z)
    out = np.sinh(safe) / safe
    z2 = z * z
    return np.where(small, 1.0 + z2 / 6.0 + z2 * z2 / 120.0, out)


def _propagator_entries(p, q, omega, t):
    """Closed-form entries (u11, u12, u22) for constant detuning, broadcasting.

    Written with cosh(x) and x^-1 sinh(x), both even in Omega, so the choice of
    square-root branch drops out and Omega -> 0 is regular.
    """
    omega = np.asarray(omega, dtype=float)
    t = np.asarray(t, dtype=float)
    a = q - 1j * omega
    big_omega = np.sqrt(a * a - 4.0 * p * p)
    half = 0.5 * big_omega * t
    pre = np.exp(-0.5 * (q + 1j * omega) * t)
    ch = np.cosh(half)
    # (2/Omega) sh(Omega t/2) = t * sinhc(Omega t/2)
    tsh = t * _sinhc(half)
    u11 = pre * (ch + 0.5 * a * tsh)
    u22 = pre * (ch - 0.5 * a * tsh)
    u12 = -p * pre * tsh
    return u11, u12, u22


def constant_propagator(params: SystemParams, omega: float, t: float) -> Matrix2:
    """Exact evolution operator for a detuning held constant over ``t``."""
    if t < 0:
        raise ValueError(f"duration must be >= 0, got {t}")
    u11, u12, u22 = _propagator_entries(params.p, params.q, omega, t)
    return Matrix2(complex(u11), complex(u12), complex(-u12), complex(u22))


def step_propagators(params: SystemParams, omegas, dt: float) -> np.ndarray:
    """Stack of per-step propagators, shape (n, 2, 2)."""
    u11, u12, u22 = _propagator_entries(params.p, params.q, np.asarray(omegas, dtype=float), dt)
    out = np.empty((np.size(omegas), 2, 2), dtype=complex)
    out[:, 0, 0] = u11
    out[:, 0, 1] = u12
    out[:, 1, 0] = -u12
    out[:, 1, 1] = u22
    return out


def _chain(us: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """Apply u[0], u[1], ... in turn to ``x0``; returns every intermediate state."""
    n = us.shape[0]
    xs = np.empty((n + 1, x0.shape[0]), dtype=complex)
    xs[0] = x0
    a, b = complex(x0[0]), complex(x0[1])
    # plain complex scalars: ~10x faster than numpy matmul on 2-vectors
    u = us.tolist()
    for k in range(n):
        (u11, u12), (u21, u22) = u[k]
        a, b = u11 * a + u12 * b, u21 * a + u22 * b
        xs[k + 1, 0] = a
        xs[k + 1, 1] = b
    return xs


def propagate(params: SystemParams, field: ControlField, s0: ReducedState = CASE1) -> Trajectory:
    """Exact trajectory at every step boundary of ``field``."""
    us = step_propagators(params, field.samples, field.dt)
    xs = _chain(us, s0.as_array())
    return Trajectory(field.times, xs[:, 0], xs[:, 1])


def final_state(params: SystemParams, field: ControlField, s0: ReducedState = CASE1) -> ReducedState:
    return propagate(params, field, s0).final


def accumulated_propagator(params: SystemParams, field: ControlField) -> np.ndarray:
    """Time-ordered product U(w_n, dt) ... U(w_1, dt) as a 2x2 array."""
    total = np.eye(2, dtype=complex)
    for u in step_propagators(params, field.samples, field.dt):
        total = u @ total
    return total


def propagate_multimode(params: MultiModeParams, field: ControlField, s0: MultiModeState) -> MultiModeTrajectory:
    """Exact trajectory for an N-Lorentzian bath via small matrix exponentials."""
    n = params.n_modes
    if len(s0.y) != n:
        raise ValueError(f"state has {len(s0.y)} mode amplitudes but the bath has {n} modes")
    # one exponential per distinct detuning value
    uniq, inverse = np.unique(field.samples, return_inverse=True)
    gens = np.stack([params.generator(w) for w in uniq]) * field.dt
    props = expm(gens)
    xs = np.empty((field.n_steps + 1, n + 1), dtype=complex)
    xs[0] = s0.as_array()
    for k, idx in enumerate(inverse):
        xs[k + 1] = props[idx] @ xs[k]
    return MultiModeTrajectory(field.times, xs)


def det_of_propagator(field: ControlField, params: SystemParams, t: float) -> complex:
    """Predicted determinant exp(-q t - i W(t)) of the accumulated propagator.

    ``t`` must fall on a step boundary of ``field``.
    """
    m = t / field.dt
    k = int(round(m))
    if t < 0 or k > field.n_steps or abs(m - k) > 1e-9 * max(1.0, m):
        raise ValueError(f"t = {t} is not a step boundary of the field")
    w = float(np.sum(field.samples[:k])) * field.dt
    return complex(np.exp(-params.q * k * field.dt - 1j * w))


def _generators(params, samples: np.ndarray) -> np.ndarray:
    if isinstance(params, SystemParams):
        params = MultiModeParams.from_single(params)
    return np.stack([params.generator(w) for w in samples])


def rk4_reference(params, field: ControlField, s0, substeps: int = 1000):
    """Classical fixed-step RK4 on the linear ODE, for use as a test oracle.

    Each field step is split into ``substeps`` RK4 steps with the detuning held
    constant. Returns a :class:`Trajectory` (single mode) or
    :class:`MultiModeTrajectory` sampled at the field's step boundaries.
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    gens = _generators(params, field.samples)
    h = field.dt / substeps
    x = s0.as_array().astype(complex)
    xs = [x.copy()]
    for m in gens:
        for _ in range(substeps):
            k1 = m @ x
            k2 = m @ (x + 0.5 * h * k1)
            k3 = m @ (x + 0.5 * h * k2)
            k4 = m @ (x + h * k3)
            x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        xs.append(x.copy())
    xs = np.array(xs)
    if isinstance(params, SystemParams):
        return Trajectory(field.times, xs[:, 0], xs[:, 1])
    return MultiModeTrajectory(field.times, xs)


def rk4_propagator_batch(p, q, omega, t, substeps: int) -> np.ndarray:
    """RK4 propagators for many constant-field cases at once, shape (B, 2, 2).

    Integrates both basis vectors of every case with ``substeps`` steps of size
    t/substeps; vectorised over the batch so large substep counts stay cheap.
    """
    p, q, omega, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (p, q, omega, t)))
    b = p.size
    m = np.zeros((b, 2, 2), dtype=complex)
    m[:, 0, 0] = -1j * omega.ravel()
    m[:, 0, 1] = -p.ravel()
    m[:, 1, 0] = p.ravel()
    m[:, 1, 1] = -q.ravel()
    h = (t.ravel() / substeps)[:, None, None]
    x = np.broadcast_to(np.eye(2, dtype=complex), (b, 2, 2)).copy()
    for _ in range(substeps):
        k1 = m @ x
        k2 = m @ (x + 0.5 * h * k1)
        k3 = m @ (x + 0.5 * h * k2)
        k4 = m @ (x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def weak_coupling_population(params: SystemParams, omega_max: float, t):
    """Exponential decay exp(-2 p^2 q t / |q + i w_max|^2) of the weak-coupling limit."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    rate = 2 * params.p**2 * params.q / (params.q**2 + omega_max**2)
    out = np.exp(-rate * t)
    return out if out.ndim else float(out)
