"""Photon-number resolved work statistics from the Cayley-tree expansion.

Trajectories are grouped by the number of photons exchanged during the drive.
For n = 0 the weights follow from the no-jump amplitudes and Poisson factors
at T; for n = 1 the jump time is integrated out with adaptive Simpson.  Work
values (units of hbar omega0) of the eight one-photon branches, ordered as
``(initial, jump, final)``::

    g absorb g: -1    g absorb e:  0    g emit g: +1    g emit e: +2
    e absorb g: -2    e absorb e: -1    e emit g:  0    e emit e: +1
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from .model import gibbs_populations, half_step_couplings, steps_for
from .propagator import PropagatorTable, inverse_2x2, poisson_weighted
from .quadrature import adaptive_simpson
from .work import DEFAULT_DT

ONE_PHOTON_WORK = np.array([-1, 0, 1, 2, -2, -1, 0, 1])


class NotResonant(ValueError):
    """Closed-form expressions only hold for a forward resonant sine drive."""


class DegenerateDenominator(ZeroDivisionError):
    pass


@njit(cache=True)
def _propagate_nonlinear(a, b, coefs, dt, n_steps, gdn, gup):
    out_a = np.empty(n_steps + 1, np.complex128)
    out_b = np.empty(n_steps + 1, np.complex128)
    out_pi = np.empty(n_steps + 1)
    out_a[0] = a
    out_b[0] = b
    out_pi[0] = 0.0
    dg = gdn - gup
    pi = 0.0
    for k in range(n_steps):
        c0 = coefs[2 * k]
        cm = coefs[2 * k + 1]
        c1 = coefs[2 * k + 2]
        stages_a = np.empty(4, np.complex128)
        stages_b = np.empty(4, np.complex128)
        stages_p = np.empty(4)
        ya, yb = a, b
        for st in range(4):
            if st == 0:
                c = c0
            elif st == 3:
                c = c1
            else:
                c = cm
            pa = ya.real * ya.real + ya.imag * ya.imag
            pb = yb.real * yb.real + yb.imag * yb.imag
            stages_a[st] = -1j * np.conj(c) * yb + 0.5 * dg * pb * ya
            stages_b[st] = -1j * c * ya - 0.5 * dg * pa * yb
            stages_p[st] = gup * pa + gdn * pb
            frac = dt if st == 2 else 0.5 * dt
            ya = a + frac * stages_a[st]
            yb = b + frac * stages_b[st]
        a = a + dt / 6.0 * (stages_a[0] + 2 * stages_a[1] + 2 * stages_a[2] + stages_a[3])
        b = b + dt / 6.0 * (stages_b[0] + 2 * stages_b[1] + 2 * stages_b[2] + stages_b[3])
        pi += dt / 6.0 * (stages_p[0] + 2 * stages_p[1] + 2 * stages_p[2] + stages_p[3])
        norm = math.sqrt(a.real * a.real + a.imag * a.imag + b.real * b.real + b.imag * b.imag)
        a /= norm
        b /= norm
        out_a[k + 1] = a
        out_b[k + 1] = b
        out_pi[k + 1] = pi
    return out_a, out_b, out_pi


@dataclass
class AmplitudePropagator:
    """No-jump amplitudes and Poisson exponent from an eigenstate at ``times[0]``."""

    initial: str
    times: np.ndarray
    a: np.ndarray
    b: np.ndarray
    pi: np.ndarray

    @property
    def pop_g(self):
        return np.abs(self.a) ** 2

    @property
    def pop_e(self):
        return np.abs(self.b) ** 2

    def end(self):
        """``(|a|^2, |b|^2, pi)`` at the final time."""
        return float(self.pop_g[-1]), float(self.pop_e[-1]), float(self.pi[-1])


def propagate_amplitudes(initial, t1, t_end, params, protocol, dt=DEFAULT_DT):
    """Integrate the normalized no-jump equations from eigenstate ``initial`` at t1.

    The Poisson exponent ``pi(t, t1) = int (gamma_up |a|^2 + gamma_down |b|^2)``
    is accumulated with the same RK4 stages.
    """
    if initial not in ("g", "e"):
        raise ValueError("initial must be 'g' or 'e'")
    span = float(t_end) - float(t1)
    if span < 0:
        raise ValueError("t_end must not precede t1")
    n_steps = steps_for(span, dt)
    a0, b0 = (1.0 + 0j, 0j) if initial == "g" else (0j, 1.0 + 0j)
    if n_steps == 0:
        return AmplitudePropagator(initial, np.array([float(t1)]), np.array([a0]),
                                   np.array([b0]), np.zeros(1))
    h = span / n_steps
    coefs = half_step_couplings(protocol, float(t1), h, n_steps)
    a, b, pi = _propagate_nonlinear(a0, b0, coefs, h, n_steps,
                                    params.gamma_down, params.gamma_up)
    return AmplitudePropagator(initial, float(t1) + h * np.arange(n_steps + 1), a, b, pi)


class PhotonStatistics(NamedTuple):
    P: float
    mean_W: float
    mean_W2: float
    je_term: float


def _populations(params, populations):
    return gibbs_populations(params.beta) if populations is None else populations


def _boltz_up(p, beta):
    """``p * exp(beta)`` with the convention 0 * inf = 0."""
    return 0.0 if p == 0.0 else p * math.exp(beta)


def p0_statistics(params, protocol, dt=DEFAULT_DT, populations=None):
    """Zero-photon probability, conditional moments and Jarzynski term."""
    p_g, p_e = _populations(params, populations)
    T = protocol.duration
    ag2, bg2, pig = propagate_amplitudes("g", 0.0, T, params, protocol, dt).end()
    ae2, be2, pie = propagate_amplitudes("e", 0.0, T, params, protocol, dt).end()
    beta = params.beta
    wg = p_g * math.exp(-pig)
    we = p_e * math.exp(-pie)
    P0 = wg + we
    m1 = wg * bg2 - we * ae2
    m2 = wg * bg2 + we * ae2
    je = wg * (ag2 + bg2 * math.exp(-beta)) + _boltz_up(we * ae2, beta) + we * be2
    return PhotonStatistics(P0, m1 / P0 if P0 else 0.0, m2 / P0 if P0 else 0.0, je)


def one_photon_branches(params, protocol, dt=DEFAULT_DT, populations=None,
                        tol=1e-9, table=None):
    """Integrated probabilities of the eight one-photon branches."""
    p_g, p_e = _populations(params, populations)
    gdn, gup = params.gamma_down, params.gamma_up
    if gdn == 0.0 and gup == 0.0:
        return np.zeros(8)
    table = table or PropagatorTable(params, protocol, dt)
    U_T = table.final

    def integrand(t):
        F = table.at(t)
        G = U_T @ inverse_2x2(F)
        wF = poisson_weighted(F)
        wG = poisson_weighted(G)
        g_abs = p_g * gup * wF[:, 0, 0]
        g_emit = p_g * gdn * wF[:, 1, 0]
        e_abs = p_e * gup * wF[:, 0, 1]
        e_emit = p_e * gdn * wF[:, 1, 1]
        return np.stack([
            g_abs * wG[:, 0, 1], g_abs * wG[:, 1, 1],
            g_emit * wG[:, 0, 0], g_emit * wG[:, 1, 0],
            e_abs * wG[:, 0, 1], e_abs * wG[:, 1, 1],
            e_emit * wG[:, 0, 0], e_emit * wG[:, 1, 0],
        ], axis=1)

    n_init = max(1, int(math.ceil(8 * protocol.n_cycles)))
    return adaptive_simpson(integrand, 0.0, protocol.duration, tol=tol,
                            min_intervals=n_init)


def p1_statistics(params, protocol, dt=DEFAULT_DT, populations=None, tol=1e-9,
                  table=None):
    """One-photon probability, conditional moments and Jarzynski term."""
    w = one_photon_branches(params, protocol, dt, populations, tol, table)
    P1 = math.fsum(w)
    if P1 == 0.0:
        return PhotonStatistics(0.0, 0.0, 0.0, 0.0)
    W = ONE_PHOTON_WORK
    je = math.fsum(wi * math.exp(-params.beta * Wi) if wi else 0.0
                   for wi, Wi in zip(w, W))
    return PhotonStatistics(P1, math.fsum(w * W) / P1, math.fsum(w * W * W) / P1, je)


@dataclass
class CayleyResult:
    zero: PhotonStatistics
    one: PhotonStatistics
    reverse_P0: float = math.nan
    reverse_P1: float = math.nan
    two_photon_bound: float = math.nan

    @property
    def P0(self):
        return self.zero.P

    @property
    def P1(self):
        return self.one.P

    @property
    def first_moment(self):
        """``P0 <W>_0 + P1 <W>_1``."""
        return self.zero.P * self.zero.mean_W + self.one.P * self.one.mean_W

    @property
    def second_moment(self):
        return self.zero.P * self.zero.mean_W2 + self.one.P * self.one.mean_W2

    @property
    def jarzynski_lhs(self):
        return self.zero.je_term + self.one.je_term

    @property
    def jarzynski_rhs(self):
        return self.reverse_P0 + self.reverse_P1

    @property
    def multi_photon_mass(self):
        return 1.0 - self.zero.P - self.one.P


def reversed_model(params, protocol):
    """Model whose trajectories are the time reverses of the forward ones.

    The drive runs backwards and each reversed path exchanges absorption for
    emission; the physical rates stay put so that the linear no-jump
    propagators obey ``U_R(T - t1, T - t2) = U(t2, t1)^T``.
    """
    return params, protocol.reverse()


def cayley_statistics(params, protocol, dt=DEFAULT_DT, populations=None, tol=1e-9,
                      reverse=True):
    zero = p0_statistics(params, protocol, dt, populations)
    one = p1_statistics(params, protocol, dt, populations, tol)
    res = CayleyResult(zero, one,
                       two_photon_bound=0.5 * (params.gamma_sigma * protocol.duration) ** 2)
    if reverse:
        pops = _populations(params, populations)
        params_r, protocol_r = reversed_model(params, protocol)
        res.reverse_P0 = p0_statistics(params_r, protocol_r, dt, pops).P
        res.reverse_P1 = p1_statistics(params_r, protocol_r, dt, pops, tol).P
    return res


def combined_moment_ratio(cayley):
    """``<W^2> / <W>`` over the zero- and one-photon classes together."""
    den = cayley.first_moment
    if den == 0.0:
        raise DegenerateDenominator("<W> vanishes; ratio undefined")
    return cayley.second_moment / den


def reverse_identity_check(params, protocol, n, dt=DEFAULT_DT, populations=None,
                           tol=1e-9):
    """``(P_n <exp(-beta W)>_n, P_{R,n}, |difference|)`` for n in {0, 1}."""
    pops = _populations(params, populations)
    params_r, protocol_r = reversed_model(params, protocol)
    if n == 0:
        lhs = p0_statistics(params, protocol, dt, pops).je_term
        rhs = p0_statistics(params_r, protocol_r, dt, pops).P
    elif n == 1:
        lhs = p1_statistics(params, protocol, dt, pops, tol).je_term
        rhs = p1_statistics(params_r, protocol_r, dt, pops, tol).P
    else:
        raise ValueError("only n = 0 and n = 1 are evaluated analytically")
    return lhs, rhs, abs(lhs - rhs)


# --- first order in the rates, resonant drive -----------------------------

def perturbative_populations(lambda0, delta_gamma, elapsed):
    """``(|a_g|^2, |a_e|^2)`` after ``elapsed`` of resonant drive, first order."""
    x = 0.5 * lambda0 * np.asarray(elapsed, dtype=float)
    corr = delta_gamma / lambda0 * np.cos(x) * np.sin(x) ** 3
    return np.cos(x) ** 2 + corr, np.sin(x) ** 2 + corr


def perturbative_exponents(params, protocol):
    """``(pi_g(T, 0), pi_e(T, 0))`` to first order in the rates."""
    _require_resonant(protocol)
    T = protocol.duration
    lam = protocol.lambda0
    shift = params.delta_gamma / (2.0 * lam) * math.sin(lam * T)
    base = 0.5 * params.gamma_sigma * T
    return base - shift, base + shift


def _require_resonant(protocol):
    if not protocol.is_resonant or protocol.reversed:
        raise NotResonant("closed forms need a forward drive at omega = omega0")


class PerturbativeResult(NamedTuple):
    zero: PhotonStatistics
    one: PhotonStatistics

    @property
    def first_moment(self):
        return self.zero.P * self.zero.mean_W + self.one.P * self.one.mean_W

    @property
    def second_moment(self):
        return self.zero.P * self.zero.mean_W2 + self.one.P * self.one.mean_W2

    @property
    def ratio(self):
        if self.first_moment == 0.0:
            raise DegenerateDenominator("<W> vanishes; ratio undefined")
        return self.second_moment / self.first_moment


def perturbative_statistics(params, protocol, populations=None):
    """Closed forms to linear order in gamma_down, gamma_up (resonant sine drive)."""
    _require_resonant(protocol)
    p_g, p_e = _populations(params, populations)
    T = protocol.duration
    lam = protocol.lambda0
    gs = params.gamma_sigma
    dg = params.delta_gamma
    gdn, gup = params.gamma_down, params.gamma_up
    s = math.sin(lam * T)
    c = math.cos(lam * T)
    rabi = math.sin(0.5 * lam * T) ** 2

    P0 = 1.0 - 0.5 * gs * T + (p_g - p_e) * dg / (2.0 * lam) * s
    P0W = (p_g - p_e) * (1.0 - 0.5 * gs * T) * rabi
    P0W2 = (1.0 - 0.5 * gs * T) * rabi
    P1 = 0.5 * gs * T - (p_g - p_e) * dg / (2.0 * lam) * s
    minus = T / 4 - T / 8 * c - s / (8 * lam)
    plus = T / 4 + T / 8 * c - 3 * s / (8 * lam)
    P1W = dg * minus + 2 * (p_g * gdn - p_e * gup) * plus
    P1W2 = gs * minus + 4 * (p_g * gdn + p_e * gup) * plus
    zero = PhotonStatistics(P0, P0W / P0, P0W2 / P0, P0)
    one = (PhotonStatistics(P1, P1W / P1, P1W2 / P1, P1) if P1 != 0.0
           else PhotonStatistics(0.0, 0.0, 0.0, 0.0))
    return PerturbativeResult(zero, one)
