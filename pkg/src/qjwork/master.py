"""Bloch-Redfield master equation for the driven qubit (interaction picture).

Used as the deterministic reference for ensemble averages of the jump engine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import TWO_PI, gibbs_populations


@dataclass(frozen=True)
class ReducedDensityMatrix:
    sigma_gg: float
    sigma_ge: complex

    @property
    def sigma_ee(self):
        return 1.0 - self.sigma_gg

    def positivity_margin(self):
        return self.sigma_gg * self.sigma_ee - abs(self.sigma_ge) ** 2

    @classmethod
    def thermal(cls, beta_hbar_omega0):
        p_g, _ = gibbs_populations(beta_hbar_omega0)
        return cls(p_g, 0j)

    @classmethod
    def excited(cls):
        return cls(0.0, 0j)


@dataclass
class MasterSolution:
    times: np.ndarray
    sigma_gg: np.ndarray
    sigma_ge: np.ndarray

    @property
    def sigma_ee(self):
        return 1.0 - self.sigma_gg


def _rhs(gg, ge, lam, phase, gdn, gsum):
    dgg = -2.0 * lam * (ge * phase).imag - gsum * gg + gdn
    dge = 1j * lam * phase.conjugate() * (2.0 * gg - 1.0) - 0.5 * gsum * ge
    return dgg, dge


def bloch_redfield_derivatives(sigma, t, params, protocol):
    """``(d sigma_gg/dt, d sigma_ge/dt)`` at time ``t``."""
    lam = float(protocol.value(t))
    phase = complex(math.cos(t), math.sin(t))
    return _rhs(float(sigma.sigma_gg), complex(sigma.sigma_ge), lam, phase,
                params.gamma_down, params.gamma_sigma)


def integrate_master(params, protocol, sigma0, t_grid, max_step=TWO_PI / 1000):
    """Classical RK4 on ``t_grid``, sub-stepping intervals longer than max_step."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    gdn = params.gamma_down
    gsum = params.gamma_sigma
    gg = float(sigma0.sigma_gg)
    ge = complex(sigma0.sigma_ge)
    out_gg = np.empty(t_grid.size)
    out_ge = np.empty(t_grid.size, dtype=complex)
    out_gg[0] = gg
    out_ge[0] = ge
    value = protocol.value
    for i in range(1, t_grid.size):
        t0 = t_grid[i - 1]
        span = t_grid[i] - t0
        n_sub = max(1, int(math.ceil(span / max_step - 1e-9)))
        h = span / n_sub
        for j in range(n_sub):
            t = t0 + j * h
            tm = t + 0.5 * h
            t1 = t + h
            l0, lm, l1 = float(value(t)), float(value(tm)), float(value(t1))
            p0 = complex(math.cos(t), math.sin(t))
            pm = complex(math.cos(tm), math.sin(tm))
            p1 = complex(math.cos(t1), math.sin(t1))
            k1g, k1c = _rhs(gg, ge, l0, p0, gdn, gsum)
            k2g, k2c = _rhs(gg + 0.5 * h * k1g, ge + 0.5 * h * k1c, lm, pm, gdn, gsum)
            k3g, k3c = _rhs(gg + 0.5 * h * k2g, ge + 0.5 * h * k2c, lm, pm, gdn, gsum)
            k4g, k4c = _rhs(gg + h * k3g, ge + h * k3c, l1, p1, gdn, gsum)
            gg += h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
            ge += h / 6.0 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)
        if not (math.isfinite(gg) and math.isfinite(ge.real) and math.isfinite(ge.imag)):
            raise FloatingPointError(f"master equation diverged at t={t_grid[i]:.6g}")
        out_gg[i] = gg
        out_ge[i] = ge
    return MasterSolution(t_grid, out_gg, out_ge)


def compare_ensemble(mean_pop_e, solution):
    """Sup-norm distance between an ensemble-mean |b|^2 and sigma_ee on a shared grid.

    ``mean_pop_e`` may also be a sequence of Trajectory objects sampled on the
    solution's grid.
    """
    if not isinstance(mean_pop_e, np.ndarray):
        mean_pop_e = np.mean([tr.pop_e for tr in mean_pop_e], axis=0)
    if mean_pop_e.shape != solution.times.shape:
        raise ValueError("ensemble and master equation must share one time grid")
    return float(np.max(np.abs(mean_pop_e - solution.sigma_ee)))
