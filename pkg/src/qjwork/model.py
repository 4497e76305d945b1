"""Physical parameters, drive protocols and thermal bookkeeping.

Natural units throughout: hbar = 1 and omega0 = 1, so times are in units of
1/omega0, rates in units of omega0 and energies in units of hbar*omega0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ModelParams:
    """Qubit + thermal bath.

    Attributes
    ----------
    beta_hbar_omega0 : float
        Dimensionless inverse temperature, ``math.inf`` for zero temperature.
    gamma_down, gamma_up : float
        Emission and absorption rates in units of omega0.
    omega0 : float
        Level splitting; fixed to 1.
    """

    beta_hbar_omega0: float
    gamma_down: float
    gamma_up: float
    omega0: float = 1.0

    def __post_init__(self):
        if self.omega0 != 1.0:
            raise ValueError("omega0 is the unit of frequency and must be 1.0")
        if not self.beta_hbar_omega0 >= 0:
            raise ValueError(
                f"beta_hbar_omega0 must be >= 0, got {self.beta_hbar_omega0}")
        if self.gamma_down < 0 or self.gamma_up < 0:
            raise ValueError("rates must be non-negative")

    @classmethod
    def from_detailed_balance(cls, gamma_down, beta_hbar_omega0):
        return cls(beta_hbar_omega0=float(beta_hbar_omega0),
                   gamma_down=float(gamma_down),
                   gamma_up=rates_from_detailed_balance(gamma_down, beta_hbar_omega0))

    @property
    def beta(self):
        return self.beta_hbar_omega0

    @property
    def delta_gamma(self):
        return self.gamma_down - self.gamma_up

    @property
    def gamma_sigma(self):
        return self.gamma_down + self.gamma_up

    @property
    def satisfies_detailed_balance(self):
        return math.isclose(self.gamma_up,
                            rates_from_detailed_balance(self.gamma_down, self.beta),
                            rel_tol=1e-12, abs_tol=1e-300)

    def populations(self):
        return gibbs_populations(self.beta_hbar_omega0)

    def swapped_rates(self):
        """Rates with the roles of emission and absorption exchanged."""
        return replace(self, gamma_down=self.gamma_up, gamma_up=self.gamma_down)


def gibbs_populations(beta_hbar_omega0):
    """Thermal ``(p_g, p_e)`` of the undriven qubit."""
    if not beta_hbar_omega0 >= 0:
        raise ValueError("negative temperature is not supported")
    if math.isinf(beta_hbar_omega0):
        return 1.0, 0.0
    boltz = math.exp(-beta_hbar_omega0)
    p_g = 1.0 / (1.0 + boltz)
    p_e = boltz / (1.0 + boltz)
    return p_g, p_e


def rates_from_detailed_balance(gamma_down, beta_hbar_omega0):
    """Absorption rate ``gamma_up = gamma_down * exp(-beta hbar omega0)``."""
    if gamma_down < 0:
        raise ValueError("gamma_down must be >= 0")
    if not beta_hbar_omega0 >= 0:
        raise ValueError("negative temperature is not supported")
    return float(gamma_down) * math.exp(-beta_hbar_omega0)


@dataclass(frozen=True)
class DriveProtocol:
    """Sinusoidal drive ``lambda0 sin(omega t)`` switched on for ``n_cycles`` periods.

    ``reversed=True`` gives the time-mirrored protocol ``value(T - t)``.
    """

    lambda0: float
    n_cycles: float
    omega: float = 1.0
    reversed: bool = False

    def __post_init__(self):
        if self.n_cycles < 0:
            raise ValueError("n_cycles must be >= 0")
        if self.omega <= 0:
            raise ValueError("drive frequency must be positive")

    @classmethod
    def pi_pulse(cls, lambda0, omega=1.0):
        """Resonant pulse of duration pi/lambda0 (a full g <-> e swap)."""
        duration = math.pi / lambda0
        return cls(lambda0=lambda0, n_cycles=duration * omega / TWO_PI, omega=omega)

    @property
    def duration(self):
        return TWO_PI * self.n_cycles / self.omega

    @property
    def period(self):
        return TWO_PI / self.omega

    @property
    def is_resonant(self):
        return self.omega == 1.0

    def reverse(self):
        return replace(self, reversed=not self.reversed)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        T = self.duration
        s = T - t if self.reversed else t
        inside = (t >= 0.0) & (t <= T)
        out = np.where(inside, self.lambda0 * np.sin(self.omega * s), 0.0)
        return out if out.ndim else float(out)

    def coupling(self, t):
        """Interaction-picture coupling ``lambda(t) exp(i omega0 t)``."""
        t = np.asarray(t, dtype=float)
        return self.value(t) * np.exp(1j * t)


def drive_value(protocol, t):
    return protocol.value(t)


def half_step_couplings(protocol, t0, dt, n_steps):
    """Coupling sampled at ``t0 + j dt/2`` for j = 0..2 n_steps (RK4 stages)."""
    t = t0 + 0.5 * dt * np.arange(2 * n_steps + 1)
    return np.ascontiguousarray(protocol.coupling(t), dtype=np.complex128)


def steps_for(span, dt):
    """Integer number of steps covering ``span`` with step size at most ``dt``."""
    if span <= 0:
        return 0
    return max(1, int(math.ceil(span / dt - 1e-9)))


@dataclass(frozen=True)
class PureState:
    """Amplitudes of ``a|g> + b|e>`` (interaction picture)."""

    a: complex
    b: complex

    @classmethod
    def ground(cls):
        return cls(1.0 + 0j, 0j)

    @classmethod
    def excited(cls):
        return cls(0j, 1.0 + 0j)

    @classmethod
    def eigenstate(cls, label):
        if label == "g":
            return cls.ground()
        if label == "e":
            return cls.excited()
        raise ValueError(f"unknown eigenstate {label!r}")

    @property
    def pop_e(self):
        return abs(self.b) ** 2

    @property
    def pop_g(self):
        return abs(self.a) ** 2

    @property
    def norm2(self):
        return self.pop_g + self.pop_e

    def normalized(self):
        n = math.sqrt(self.norm2)
        return PureState(self.a / n, self.b / n)
