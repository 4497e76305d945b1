"""Tabulated linear no-jump propagator U(t, 0).

The unnormalized no-jump state obeys the linear equation
``d psi/dt = A(t) psi`` with

    A(t) = [[-gamma_up/2,  -i conj(c(t))],
            [-i c(t),      -gamma_down/2]]

in the interaction picture.  Normalizing ``U(t, t1) e`` gives the nonlinear
no-jump amplitudes started from eigenstate ``e`` at ``t1``, and its squared norm
is the Poisson factor ``exp(-pi(t, t1))``.  Since ``U(t, t1) = U(t, 0) U(t1, 0)^-1``
one table over the window serves every restart time.
"""
import math

import numpy as np
from numba import njit

from .model import half_step_couplings, steps_for


@njit(cache=True)
def _apply(c, gdn, gup, x, y):
    return -0.5 * gup * x - 1j * np.conj(c) * y, -1j * c * x - 0.5 * gdn * y


@njit(cache=True)
def _linear_table(coefs, dt, n_steps, gdn, gup):
    U = np.empty((n_steps + 1, 2, 2), dtype=np.complex128)
    U[0, 0, 0] = 1.0
    U[0, 0, 1] = 0.0
    U[0, 1, 0] = 0.0
    U[0, 1, 1] = 1.0
    for k in range(n_steps):
        c0 = coefs[2 * k]
        cm = coefs[2 * k + 1]
        c1 = coefs[2 * k + 2]
        for col in range(2):
            x = U[k, 0, col]
            y = U[k, 1, col]
            k1x, k1y = _apply(c0, gdn, gup, x, y)
            k2x, k2y = _apply(cm, gdn, gup, x + 0.5 * dt * k1x, y + 0.5 * dt * k1y)
            k3x, k3y = _apply(cm, gdn, gup, x + 0.5 * dt * k2x, y + 0.5 * dt * k2y)
            k4x, k4y = _apply(c1, gdn, gup, x + dt * k3x, y + dt * k3y)
            U[k + 1, 0, col] = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            U[k + 1, 1, col] = y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    return U


def inverse_2x2(U):
    det = U[..., 0, 0] * U[..., 1, 1] - U[..., 0, 1] * U[..., 1, 0]
    inv = np.empty_like(U)
    inv[..., 0, 0] = U[..., 1, 1] / det
    inv[..., 0, 1] = -U[..., 0, 1] / det
    inv[..., 1, 0] = -U[..., 1, 0] / det
    inv[..., 1, 1] = U[..., 0, 0] / det
    return inv


def generator(protocol, params, t):
    """A(t) stacked over the shape of ``t``."""
    c = protocol.coupling(t)
    A = np.zeros(np.shape(c) + (2, 2), dtype=np.complex128)
    A[..., 0, 0] = -0.5 * params.gamma_up
    A[..., 0, 1] = -1j * np.conj(c)
    A[..., 1, 0] = -1j * c
    A[..., 1, 1] = -0.5 * params.gamma_down
    return A


class PropagatorTable:
    """U(t_k, 0) on ``t_k = k dt`` over ``[0, T]`` plus cubic Hermite lookup."""

    def __init__(self, params, protocol, dt, t_end=None):
        self.params = params
        self.protocol = protocol
        self.t_end = protocol.duration if t_end is None else float(t_end)
        self.n_steps = steps_for(self.t_end, dt)
        self.dt = self.t_end / self.n_steps
        coefs = half_step_couplings(protocol, 0.0, self.dt, self.n_steps)
        self.U = _linear_table(coefs, self.dt, self.n_steps,
                               params.gamma_down, params.gamma_up)
        self.U_inv = inverse_2x2(self.U)
        self.times = self.dt * np.arange(self.n_steps + 1)
        self._dU = generator(protocol, params, self.times) @ self.U

    def at(self, t):
        """U(t, 0) for scalar or array ``t`` in ``[0, T]``."""
        t = np.asarray(t, dtype=float)
        x = np.clip(t / self.dt, 0.0, self.n_steps)
        k = np.minimum(np.floor(x).astype(int), self.n_steps - 1)
        s = (x - k)[..., None, None]
        h = self.dt
        s2 = s * s
        s3 = s2 * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = s3 - 2 * s2 + s
        h01 = -2 * s3 + 3 * s2
        h11 = s3 - s2
        return (h00 * self.U[k] + h10 * h * self._dU[k]
                + h01 * self.U[k + 1] + h11 * h * self._dU[k + 1])

    def between(self, t_end, t_start):
        """U(t_end, t_start) = U(t_end, 0) U(t_start, 0)^-1."""
        return self.at(t_end) @ inverse_2x2(self.at(t_start))

    @property
    def final(self):
        return self.U[-1]


def poisson_weighted(U):
    """Squared moduli ``|U_ij|^2``: populations times the no-exchange probability."""
    return U.real ** 2 + U.imag ** 2
