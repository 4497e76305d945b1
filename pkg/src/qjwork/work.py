"""Two-measurement work statistics via guardian photons.

The system starts in a Gibbs-sampled eigenstate (equivalent to conditioning
on the last photon before the drive).  Photons exchanged during ``[0, T]`` are
heat, ``Q = n_emit - n_absorb`` in units of hbar omega0.  After the drive the
first exchanged photon measures the energy: an emission means the qubit was
found in ``e``, an absorption that it was found in ``g``.  ``W = dU + Q``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .model import TWO_PI, gibbs_populations, half_step_couplings, steps_for
from .propagator import PropagatorTable
from .quadrature import adaptive_simpson, cumulative_integrals

GUARDIAN_HORIZON = 50.0
GUARDIAN_MISS = 1e-6
DEFAULT_DT = TWO_PI / 1000


class GuardianTimeout(RuntimeError):
    """No photon was exchanged within the guardian horizon after the drive."""


@dataclass(frozen=True)
class WorkRecord:
    initial: str
    final: str
    Q: int
    W: int
    n_jumps_during_drive: int
    n_emit: int = 0
    n_absorb: int = 0


@dataclass
class WorkEnsemble:
    """Column-oriented WorkRecord collection; index ``i`` is stream ``start + i``."""

    initial: np.ndarray
    final: np.ndarray
    n_emit: np.ndarray
    n_absorb: np.ndarray
    timeout: np.ndarray
    start: int = 0
    metadata: dict = field(default_factory=dict)

    @property
    def heat(self):
        return self.n_emit - self.n_absorb

    @property
    def all_work(self):
        return self.final - self.initial + self.heat

    @property
    def valid(self):
        return ~self.timeout

    @property
    def work(self):
        """Work of every non-discarded realization, units of hbar omega0."""
        return self.all_work[self.valid]

    @property
    def indices(self):
        return self.start + np.arange(self.initial.size)

    @property
    def n_timeouts(self):
        return int(np.count_nonzero(self.timeout))

    def __len__(self):
        return int(np.count_nonzero(self.valid))

    def records(self):
        labels = ("g", "e")
        W = self.all_work
        Q = self.heat
        for i in np.flatnonzero(self.valid):
            yield WorkRecord(labels[self.initial[i]], labels[self.final[i]],
                             int(Q[i]), int(W[i]),
                             int(self.n_emit[i] + self.n_absorb[i]),
                             int(self.n_emit[i]), int(self.n_absorb[i]))

    @classmethod
    def concatenate(cls, parts, metadata=None):
        parts = list(parts)
        return cls(*(np.concatenate([getattr(p, name) for p in parts])
                     for name in ("initial", "final", "n_emit", "n_absorb", "timeout")),
                   start=parts[0].start if parts else 0,
                   metadata=dict(metadata or {}))


def guardian_horizon(params):
    """Waiting-time cut-off after the drive: at least 50 / gamma_sigma and long
    enough that either eigenstate stays silent with probability below 1e-6."""
    if params.gamma_sigma <= 0.0:
        return 0.0
    h = GUARDIAN_HORIZON / params.gamma_sigma
    slow = min(params.gamma_down, params.gamma_up)
    if slow > 0.0:
        h = max(h, -math.log(GUARDIAN_MISS) / slow)
    return h


def sample_initial_state(p_g, rng):
    if not 0.0 <= p_g <= 1.0:
        raise ValueError("p_g must lie in [0, 1]")
    return "g" if rng.uniform() < p_g else "e"


def heat_from_jumps(jumps, T):
    """Heat released to the bath by jumps inside ``[0, T]``."""
    q = 0
    for ev in jumps:
        if 0.0 <= ev.time <= T:
            q += 1 if ev.kind == engine.EMISSION else -1
    return q


def relaxation_pe(pe_T, delta_gamma, elapsed):
    """Excited population during the undriven quiet period after the drive."""
    elapsed = np.asarray(elapsed, dtype=float)
    if pe_T <= 0.0 or pe_T >= 1.0:
        out = np.full(elapsed.shape, float(pe_T))
    else:
        r = (1.0 - pe_T) / pe_T
        out = 1.0 / (1.0 + r * np.exp(delta_gamma * elapsed))
    return out if out.ndim else float(out)


def measure_by_guardian(state, params, rng, horizon=None):
    """Measure the post-drive state by the first exchanged photon.

    Returns ``(label, wait_time)``; with no bath coupling the state is
    measured by Born sampling and the wait is 0.
    """
    pe = state.pop_e / state.norm2
    eps = rng.uniform()
    u = rng.uniform()
    gdn, gup = params.gamma_down, params.gamma_up
    if params.gamma_sigma == 0.0:
        return ("e" if eps < pe else "g"), 0.0
    if horizon is None:
        horizon = guardian_horizon(params)
    s = engine.guardian_wait(pe, gdn, gup, horizon, 1.0 - eps)
    if s < 0.0:
        raise GuardianTimeout(f"no guardian photon within {horizon:.4g} "
                              f"(p_e={pe:.4g}, rates {gdn:.4g}/{gup:.4g})")
    return ("e" if engine.guardian_outcome(pe, gdn, gup, s, u) else "g"), s


def guardian_excited_probability(pe_T, params, tol=1e-10):
    """Probability that the first photon after the drive is an emission.

    Integrates the emission density ``gamma_down p_e(t) exp(-int hazard)``
    numerically with ``p_e`` from the quiet-period relaxation law.
    """
    gdn, gup = params.gamma_down, params.gamma_up
    if params.gamma_sigma <= 0.0:
        raise ValueError("guardian measurement requires gamma_down + gamma_up > 0")
    if pe_T <= 0.0 or gdn == 0.0:
        return 0.0
    dg = params.delta_gamma

    def hazard(s):
        pe = relaxation_pe(pe_T, dg, s)
        return gup * (1.0 - pe) + gdn * pe

    def integrand(s):
        s = np.atleast_1d(s)
        exponent = cumulative_integrals(hazard, np.concatenate([[0.0], s]),
                                        tol=tol * 1e-2)[1:]
        return gdn * relaxation_pe(pe_T, dg, s) * np.exp(-exponent)

    # cut-off where the remaining tail is negligible
    s_max = 10.0 / params.gamma_sigma
    while True:
        rate_tail = integrand(np.array([s_max]))[0]
        if rate_tail * s_max < 1e-3 * tol or s_max > 1e7 / params.gamma_sigma:
            break
        s_max *= 2.0
    return adaptive_simpson(integrand, 0.0, s_max, tol=tol, min_intervals=16)


def _chunk_bounds(start, n, workers):
    workers = max(1, min(int(workers), n))
    edges = [start + (n * w) // workers for w in range(workers + 1)]
    return [(edges[w], edges[w + 1] - edges[w]) for w in range(workers)]


def _run_chunk(job):
    (method, start, n, p_g, seed, horizon, gdn, gup, payload) = job
    out = [np.zeros(n, np.int64) for _ in range(4)] + [np.zeros(n, np.bool_)]
    if method == "waiting":
        U, U_inv = payload
        engine._ensemble_waiting(n, start, p_g, U, U_inv, gdn, gup, np.uint64(seed),
                                 horizon, *out)
        status = engine.STATUS_OK
    else:
        coefs, dt, n_steps, scheme = payload
        status = engine._ensemble_step(n, start, p_g, coefs, dt, n_steps, gdn, gup,
                                       scheme, np.uint64(seed), horizon, 0,
                                       np.zeros(0), *out)
    return status, out


def run_protocol_ensemble(n, params, protocol, dt=DEFAULT_DT, master_seed=0,
                          method="waiting", workers=1, start=0, scheme="rk4",
                          populations=None):
    """Simulate ``n`` realizations of the two-measurement protocol.

    ``method="waiting"`` samples each no-jump segment from the tabulated
    propagator with one uniform per segment; ``method="step"`` runs the
    per-step jump test.  Realization ``i`` uses RNG stream ``start + i`` so the
    result does not depend on ``workers``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    engine.check_step(dt, params)
    p_g = gibbs_populations(params.beta)[0] if populations is None else populations[0]
    horizon = guardian_horizon(params)
    T = protocol.duration
    if method == "waiting":
        table = PropagatorTable(params, protocol, dt)
        payload = (table.U, table.U_inv)
        h = table.dt
    elif method == "step":
        n_steps = steps_for(T, dt)
        h = T / n_steps
        payload = (half_step_couplings(protocol, 0.0, h, n_steps), h, n_steps,
                   engine._scheme_code(scheme))
    else:
        raise ValueError(f"unknown ensemble method {method!r}")

    jobs = [(method, s, m, p_g, master_seed, horizon, params.gamma_down,
             params.gamma_up, payload) for s, m in _chunk_bounds(start, n, workers)]
    if len(jobs) == 1:
        results = [_run_chunk(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
            results = list(pool.map(_run_chunk, jobs))
    if any(status == engine.STATUS_STEP_TOO_LARGE for status, _ in results):
        raise engine.StepTooLarge("jump probability per step reached the guard; "
                                  "refine dt (raise dt_per_cycle)")
    parts = [WorkEnsemble(*out, start=s) for (_, out), (s, _) in
             zip(results, _chunk_bounds(start, n, workers))]
    ens = WorkEnsemble.concatenate(parts)
    ens.start = start
    ens.metadata = {
        "master_seed": int(master_seed),
        "n_trajectories": int(n),
        "method": method,
        "dt": h,
        "beta_hbar_omega0": params.beta,
        "gamma_down": params.gamma_down,
        "gamma_up": params.gamma_up,
        "lambda0": protocol.lambda0,
        "n_cycles": protocol.n_cycles,
        "omega": protocol.omega,
        "isolated": params.gamma_sigma == 0.0,
        "guardian_horizon": horizon,
        "guardian_timeouts": ens.n_timeouts,
    }
    return ens


def guardian_frequency(pe_T, params, n, master_seed=0, start=0):
    """Fraction of ``n`` guardian measurements of ``pe_T`` that report ``e``.

    Returns ``(frequency, n_valid)``; timed-out measurements are discarded.
    """
    horizon = guardian_horizon(params)
    final = np.zeros(n, np.int64)
    timeout = np.zeros(n, np.bool_)
    engine._guardian_batch(float(pe_T), params.gamma_down, params.gamma_up, horizon,
                           np.uint64(master_seed), start, final, timeout)
    ok = ~timeout
    n_ok = int(np.count_nonzero(ok))
    return (float(np.mean(final[ok])) if n_ok else math.nan), n_ok
