"""Quantum-jump Monte Carlo for the dissipative driven qubit.

Between jumps the interaction-picture amplitudes follow the normalized,
nonlinear no-jump equations

    da/dt = -i conj(c(t)) b + (dGamma/2) |b|^2 a
    db/dt = -i c(t) a       - (dGamma/2) |a|^2 b

with ``c(t) = lambda(t) exp(i omega0 t)`` and ``dGamma = gamma_down - gamma_up``.
Each step of length dt fires a jump with probability
``dp = dt [gamma_up p_g + gamma_down p_e]`` (step-averaged populations); the
jump is placed at the end of the step and resets the state to an eigenstate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Union

import numpy as np
from numba import njit

from .model import PureState, gibbs_populations, half_step_couplings, steps_for
from .rng import RngStream, draw_uniform

MAX_STEP_PROBABILITY = 0.1

SCHEME_RK4 = 0
SCHEME_EULER = 1
_SCHEMES = {"rk4": SCHEME_RK4, "euler": SCHEME_EULER}

STATUS_OK = 0
STATUS_STEP_TOO_LARGE = 1
STATUS_BUFFER_FULL = 2

EMISSION = "emission"
ABSORPTION = "absorption"

_NO_BLOCK = np.uint64(0xFFFFFFFFFFFFFFFF)


class StepTooLarge(ValueError):
    """Jump probability per step reached the guard; dt must be refined."""


def _scheme_code(scheme):
    try:
        return _SCHEMES[scheme]
    except KeyError:
        raise ValueError(f"unknown integration scheme {scheme!r}") from None


def check_step(dt, params):
    """Raise StepTooLarge if the projected jump probability per step is >= 0.1."""
    worst = dt * max(params.gamma_down, params.gamma_up)
    if worst >= MAX_STEP_PROBABILITY:
        limit = MAX_STEP_PROBABILITY / max(params.gamma_down, params.gamma_up)
        raise StepTooLarge(
            f"dt={dt:.6g} gives jump probability {worst:.3g} per step "
            f"(guard {MAX_STEP_PROBABILITY}); use dt < {limit:.6g}, "
            f"e.g. raise dt_per_cycle")


# --- compiled kernels -------------------------------------------------------

@njit(cache=True)
def _deriv(a, b, c, dg):
    pa = a.real * a.real + a.imag * a.imag
    pb = b.real * b.real + b.imag * b.imag
    da = -1j * np.conj(c) * b + 0.5 * dg * pb * a
    db = -1j * c * a - 0.5 * dg * pa * b
    return da, db


@njit(cache=True)
def _advance(a, b, c0, cm, c1, dt, gdn, gup, scheme):
    """One normalized no-jump step; returns (a', b', dp)."""
    if scheme == SCHEME_RK4:
        dg = gdn - gup
        k1a, k1b = _deriv(a, b, c0, dg)
        k2a, k2b = _deriv(a + 0.5 * dt * k1a, b + 0.5 * dt * k1b, cm, dg)
        k3a, k3b = _deriv(a + 0.5 * dt * k2a, b + 0.5 * dt * k2b, cm, dg)
        k4a, k4b = _deriv(a + dt * k3a, b + dt * k3b, c1, dg)
        na = a + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        nb = b + dt / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    else:
        # literal first-order update with the non-Hermitian generator
        na = a + dt * (-0.5 * gup * a - 1j * np.conj(c0) * b)
        nb = b + dt * (-1j * c0 * a - 0.5 * gdn * b)
    norm = math.sqrt(na.real * na.real + na.imag * na.imag
                     + nb.real * nb.real + nb.imag * nb.imag)
    na = na / norm
    nb = nb / norm
    pe0 = b.real * b.real + b.imag * b.imag
    pe1 = nb.real * nb.real + nb.imag * nb.imag
    pe_mid = 0.5 * (pe0 + pe1)
    dp = dt * (gup * (1.0 - pe_mid) + gdn * pe_mid)
    return na, nb, dp, pe_mid


@njit(cache=True)
def _run_window(a, b, coefs, t0, dt, n_steps, gdn, gup, scheme,
                seed, stream, counter, sample_every, samples,
                jump_times, jump_kinds):
    """Jump/no-jump stepping over ``n_steps`` steps starting at ``t0``.

    Returns (a, b, counter, n_emit, n_absorb, status).  Jump kinds are stored
    as 1 (emission) / -1 (absorption) while the buffers have room.
    """
    buf = np.zeros(4, dtype=np.uint64)
    blk = _NO_BLOCK
    n_emit = 0
    n_abs = 0
    status = STATUS_OK
    cap = jump_times.shape[0]
    if sample_every > 0:
        samples[0] = b.real * b.real + b.imag * b.imag
    for k in range(n_steps):
        c0 = coefs[2 * k]
        cm = coefs[2 * k + 1]
        c1 = coefs[2 * k + 2]
        na, nb, dp, pe_mid = _advance(a, b, c0, cm, c1, dt, gdn, gup, scheme)
        if dp >= 0.1:
            return a, b, counter, n_emit, n_abs, STATUS_STEP_TOO_LARGE
        eps, blk = draw_uniform(seed, stream, counter, buf, blk)
        counter += np.uint64(1)
        if eps < dp:
            u, blk = draw_uniform(seed, stream, counter, buf, blk)
            counter += np.uint64(1)
            w_emit = gdn * pe_mid
            idx = n_emit + n_abs
            if u * (gup * (1.0 - pe_mid) + w_emit) < w_emit:
                a, b = 1.0 + 0j, 0j
                n_emit += 1
                kind = 1
            else:
                a, b = 0j, 1.0 + 0j
                n_abs += 1
                kind = -1
            if idx < cap:
                jump_times[idx] = t0 + (k + 1) * dt
                jump_kinds[idx] = kind
            elif cap > 0:
                status = STATUS_BUFFER_FULL
        else:
            a, b = na, nb
        if sample_every > 0 and (k + 1) % sample_every == 0:
            samples[(k + 1) // sample_every] = b.real * b.real + b.imag * b.imag
    return a, b, counter, n_emit, n_abs, status


@njit(cache=True)
def guardian_wait(pe, gdn, gup, horizon, eps):
    """Time until the no-jump norm ``(1-pe) e^{-gup s} + pe e^{-gdn s}`` hits eps.

    Returns -1.0 when the norm is still above eps at ``horizon``.
    """
    def norm2(s):
        return (1.0 - pe) * math.exp(-gup * s) + pe * math.exp(-gdn * s)

    if norm2(horizon) > eps:
        return -1.0
    lo = 0.0
    hi = horizon
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if norm2(mid) > eps:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    return hi


@njit(cache=True)
def guardian_outcome(pe, gdn, gup, s, u):
    """1 if the guardian photon at wait ``s`` is an emission (system was in e)."""
    w_emit = gdn * pe * math.exp(-gdn * s)
    w_abs = gup * (1.0 - pe) * math.exp(-gup * s)
    return 1 if u * (w_emit + w_abs) < w_emit else 0


@njit(cache=True)
def _measure_final(pe, gdn, gup, horizon, seed, stream, counter, buf, blk):
    """Guardian-photon (or Born, when isolated) measurement after the drive.

    Returns (final_label, timed_out, counter, blk).
    """
    eps, blk = draw_uniform(seed, stream, counter, buf, blk)
    counter += np.uint64(1)
    u, blk = draw_uniform(seed, stream, counter, buf, blk)
    counter += np.uint64(1)
    if gdn + gup == 0.0:
        return (1 if eps < pe else 0), False, counter, blk
    s = guardian_wait(pe, gdn, gup, horizon, 1.0 - eps)
    if s < 0.0:
        return 0, True, counter, blk
    return guardian_outcome(pe, gdn, gup, s, u), False, counter, blk


@njit(cache=True)
def _ensemble_step(n, start, p_g, coefs, dt, n_steps, gdn, gup, scheme, seed,
                   horizon, sample_every, pop_sum,
                   initial, final, n_emit, n_abs, timeout):
    """Per-step engine over a batch of trajectories (streams start..start+n-1)."""
    buf = np.zeros(4, dtype=np.uint64)
    n_samples = pop_sum.shape[0]
    samples = np.zeros(max(n_samples, 1))
    empty_t = np.zeros(0)
    empty_k = np.zeros(0, dtype=np.int64)
    for i in range(n):
        stream = np.uint64(start + i)
        counter = np.uint64(0)
        blk = _NO_BLOCK
        u0, blk = draw_uniform(seed, stream, counter, buf, blk)
        counter += np.uint64(1)
        if u0 < p_g:
            a, b, init = 1.0 + 0j, 0j, 0
        else:
            a, b, init = 0j, 1.0 + 0j, 1
        a, b, counter, ne, na, status = _run_window(
            a, b, coefs, 0.0, dt, n_steps, gdn, gup, scheme, seed, stream,
            counter, sample_every, samples, empty_t, empty_k)
        if status == STATUS_STEP_TOO_LARGE:
            return STATUS_STEP_TOO_LARGE
        if sample_every > 0:
            for j in range(n_samples):
                pop_sum[j] += samples[j]
        blk = _NO_BLOCK
        pe = b.real * b.real + b.imag * b.imag
        fin, to, counter, blk = _measure_final(pe, gdn, gup, horizon, seed,
                                               stream, counter, buf, blk)
        initial[i] = init
        final[i] = fin
        n_emit[i] = ne
        n_abs[i] = na
        timeout[i] = to
    return STATUS_OK


# --- Python API -------------------------------------------------------------

@dataclass(frozen=True)
class JumpEvent:
    time: float
    kind: str

    @property
    def post_state(self):
        return "g" if self.kind == EMISSION else "e"


@dataclass(frozen=True)
class NoJump:
    state: PureState


@dataclass(frozen=True)
class Jump:
    event: JumpEvent

    @property
    def state(self):
        return PureState.eigenstate(self.event.post_state)


StepOutcome = Union[NoJump, Jump]


@dataclass
class Trajectory:
    jumps: List[JumpEvent]
    times: np.ndarray
    pop_e: np.ndarray
    final_state: PureState
    counter: int = field(default=0, repr=False)

    @property
    def samples(self):
        return list(zip(self.times.tolist(), self.pop_e.tolist()))


def no_jump_derivatives(state, t, params, protocol):
    c = complex(protocol.coupling(t))
    return _deriv(complex(state.a), complex(state.b), c, params.delta_gamma)


def step_no_jump(state, t, dt, params, protocol, scheme="rk4"):
    """Advance ``state`` over ``[t, t + dt]`` assuming no photon is exchanged.

    Returns the normalized state and the jump probability of the step.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    c = half_step_couplings(protocol, t, dt, 1)
    a, b, dp, _ = _advance(complex(state.a), complex(state.b), c[0], c[1], c[2],
                           float(dt), params.gamma_down, params.gamma_up,
                           _scheme_code(scheme))
    if dp >= MAX_STEP_PROBABILITY:
        raise StepTooLarge(f"jump probability {dp:.3g} >= {MAX_STEP_PROBABILITY}; "
                           f"reduce dt={dt:.6g}")
    return PureState(a, b), dp


def mc_step(state, t, dt, params, protocol, rng, scheme="rk4"):
    """One Monte Carlo step: no-jump evolution or a jump at ``t + dt``."""
    c = half_step_couplings(protocol, t, dt, 1)
    a, b, dp, pe_mid = _advance(complex(state.a), complex(state.b), c[0], c[1],
                                c[2], float(dt), params.gamma_down,
                                params.gamma_up, _scheme_code(scheme))
    if dp >= MAX_STEP_PROBABILITY:
        raise StepTooLarge(f"jump probability {dp:.3g} >= {MAX_STEP_PROBABILITY}; "
                           f"reduce dt={dt:.6g}")
    if rng.uniform() >= dp:
        return NoJump(PureState(a, b))
    w_emit = params.gamma_down * pe_mid
    w_total = params.gamma_up * (1.0 - pe_mid) + w_emit
    kind = EMISSION if rng.uniform() * w_total < w_emit else ABSORPTION
    return Jump(JumpEvent(t + dt, kind))


def run_trajectory(initial, window, params, protocol, dt, rng, sample_every=1,
                   scheme="rk4", max_jumps=100_000):
    """Simulate one trajectory over ``window = (t_start, t_end)``.

    ``initial`` is "g", "e" or a PureState; ``dt`` is shrunk so that an
    integer number of steps spans the window.  ``rng`` is advanced in place.
    """
    t_start, t_end = map(float, window)
    state = initial if isinstance(initial, PureState) else PureState.eigenstate(initial)
    check_step(dt, params)
    n_steps = steps_for(t_end - t_start, dt)
    if n_steps == 0:
        return Trajectory([], np.array([t_start]), np.array([state.pop_e]), state,
                          rng.counter)
    h = (t_end - t_start) / n_steps
    coefs = half_step_couplings(protocol, t_start, h, n_steps)
    every = max(1, int(sample_every))
    samples = np.zeros(n_steps // every + 1)
    jt = np.zeros(max_jumps)
    jk = np.zeros(max_jumps, dtype=np.int64)
    a, b, counter, ne, na, status = _run_window(
        complex(state.a), complex(state.b), coefs, t_start, h, n_steps,
        params.gamma_down, params.gamma_up, _scheme_code(scheme),
        np.uint64(rng.master_seed), np.uint64(rng.stream_index),
        np.uint64(rng.counter), every, samples, jt, jk)
    if status == STATUS_STEP_TOO_LARGE:
        raise StepTooLarge(f"jump probability reached {MAX_STEP_PROBABILITY} "
                           f"with dt={h:.6g}; refine dt")
    if status == STATUS_BUFFER_FULL:
        raise RuntimeError(f"more than {max_jumps} jumps; raise max_jumps")
    rng.counter = int(counter)
    n = ne + na
    jumps = [JumpEvent(float(jt[i]), EMISSION if jk[i] > 0 else ABSORPTION)
             for i in range(n)]
    times = t_start + h * every * np.arange(samples.size)
    return Trajectory(jumps, times, samples, PureState(a, b), int(counter))


def mean_excited_population(n_trajectories, params, protocol, dt, master_seed,
                            sample_every=1, scheme="rk4", start=0):
    """Ensemble mean of |b(t)|^2 over the drive window, Gibbs initial states.

    Returns ``(times, mean_pop_e)`` on the sampled grid.
    """
    check_step(dt, params)
    T = protocol.duration
    n_steps = steps_for(T, dt)
    h = T / n_steps
    coefs = half_step_couplings(protocol, 0.0, h, n_steps)
    every = max(1, int(sample_every))
    pop_sum = np.zeros(n_steps // every + 1)
    n = int(n_trajectories)
    p_g, _ = gibbs_populations(params.beta)
    status = _ensemble_step(
        n, start, p_g, coefs, h, n_steps, params.gamma_down, params.gamma_up,
        _scheme_code(scheme), np.uint64(master_seed), 1.0, every, pop_sum,
        np.zeros(n, np.int64), np.zeros(n, np.int64), np.zeros(n, np.int64),
        np.zeros(n, np.int64), np.zeros(n, np.bool_))
    if status == STATUS_STEP_TOO_LARGE:
        raise StepTooLarge("jump probability per step reached the guard; refine dt")
    times = h * every * np.arange(pop_sum.size)
    return times, pop_sum / n


# --- waiting-time sampler on a tabulated propagator -------------------------

@njit(cache=True)
def _norm2_from(U, Uinv, j, s, k):
    wx = Uinv[j, 0, s]
    wy = Uinv[j, 1, s]
    x = U[k, 0, 0] * wx + U[k, 0, 1] * wy
    y = U[k, 1, 0] * wx + U[k, 1, 1] * wy
    nx = x.real * x.real + x.imag * x.imag
    ny = y.real * y.real + y.imag * y.imag
    return nx + ny, ny


@njit(cache=True)
def _segment_end(U, Uinv, j, s, eps):
    """First grid index k > j whose no-jump norm^2 (restart at j in state s) <= eps."""
    K = U.shape[0] - 1
    if j >= K:
        return -1
    n2, _ = _norm2_from(U, Uinv, j, s, K)
    if n2 > eps:
        return -1
    lo = j
    hi = K
    while hi - lo > 1:
        mid = (lo + hi) // 2
        n2, _ = _norm2_from(U, Uinv, j, s, mid)
        if n2 <= eps:
            hi = mid
        else:
            lo = mid
    return hi


@njit(cache=True)
def _ensemble_waiting(n, start, p_g, U, Uinv, gdn, gup, seed, horizon,
                      initial, final, n_emit, n_abs, timeout):
    """Waiting-time form of the jump process on the propagator grid.

    Each no-jump segment consumes one uniform eps; the jump fires at the end of
    the first grid step where the unnormalized norm^2 drops to eps.
    """
    buf = np.zeros(4, dtype=np.uint64)
    K = U.shape[0] - 1
    dissipative = gdn + gup > 0.0
    for i in range(n):
        stream = np.uint64(start + i)
        counter = np.uint64(0)
        blk = _NO_BLOCK
        u0, blk = draw_uniform(seed, stream, counter, buf, blk)
        counter += np.uint64(1)
        s = 0 if u0 < p_g else 1
        init = s
        j = 0
        ne = 0
        na = 0
        while dissipative:
            u, blk = draw_uniform(seed, stream, counter, buf, blk)
            counter += np.uint64(1)
            k = _segment_end(U, Uinv, j, s, 1.0 - u)
            if k < 0:
                break
            n_prev, b_prev = _norm2_from(U, Uinv, j, s, k - 1)
            n_k, b_k = _norm2_from(U, Uinv, j, s, k)
            pe_mid = 0.5 * (b_prev / n_prev + b_k / n_k)
            u, blk = draw_uniform(seed, stream, counter, buf, blk)
            counter += np.uint64(1)
            w_emit = gdn * pe_mid
            if u * (gup * (1.0 - pe_mid) + w_emit) < w_emit:
                s = 0
                ne += 1
            else:
                s = 1
                na += 1
            j = k
        n_T, b_T = _norm2_from(U, Uinv, j, s, K)
        fin, to, counter, blk = _measure_final(b_T / n_T, gdn, gup, horizon, seed,
                                               stream, counter, buf, blk)
        initial[i] = init
        final[i] = fin
        n_emit[i] = ne
        n_abs[i] = na
        timeout[i] = to
    return STATUS_OK


@njit(cache=True)
def _evolve_no_jump(a, b, coefs, dt, n_steps, gdn, gup, scheme):
    for k in range(n_steps):
        a, b, _, _ = _advance(a, b, coefs[2 * k], coefs[2 * k + 1], coefs[2 * k + 2],
                              dt, gdn, gup, scheme)
    return a, b


def evolve_no_jump(state, window, params, protocol, dt, scheme="rk4"):
    """Conditional no-jump state at ``window[1]`` (no jump test is made)."""
    t_start, t_end = map(float, window)
    n_steps = steps_for(t_end - t_start, dt)
    if n_steps == 0:
        return state
    h = (t_end - t_start) / n_steps
    coefs = half_step_couplings(protocol, t_start, h, n_steps)
    a, b = _evolve_no_jump(complex(state.a), complex(state.b), coefs, h, n_steps,
                           params.gamma_down, params.gamma_up, _scheme_code(scheme))
    return PureState(a, b)


@njit(cache=True)
def _guardian_batch(pe, gdn, gup, horizon, seed, start, final, timeout):
    buf = np.zeros(4, dtype=np.uint64)
    for i in range(final.shape[0]):
        fin, to, _, _ = _measure_final(pe, gdn, gup, horizon, seed,
                                       np.uint64(start + i), np.uint64(0), buf,
                                       _NO_BLOCK)
        final[i] = fin
        timeout[i] = to
