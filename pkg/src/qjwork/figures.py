"""Pipelines behind the trace, ensemble and sweep reproductions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import cayley
from .engine import run_trajectory
from .model import TWO_PI, DriveProtocol, ModelParams
from .rng import RngStream
from .stats import summarize
from .work import run_protocol_ensemble, sample_initial_state


@dataclass
class TraceResult:
    times: np.ndarray
    pop_e: np.ndarray
    jumps: list
    initial: str
    drive_window: tuple


def single_trace(params, protocol, dt, seed, prelude=2 * TWO_PI, tail=4 * TWO_PI,
                 sample_every=1, stream=0):
    """Prelude at zero drive, the drive window and a post-drive tail, one RNG stream."""
    rng = RngStream(seed, stream)
    initial = sample_initial_state(params.populations()[0], rng)
    T = protocol.duration
    times, pops, jumps = [], [], []
    state = initial
    for k, window in enumerate(((-prelude, 0.0), (0.0, T), (T, T + tail))):
        if window[1] <= window[0]:
            continue
        tr = run_trajectory(state, window, params, protocol, dt, rng,
                            sample_every=sample_every)
        skip = 1 if times else 0
        times.append(tr.times[skip:])
        pops.append(tr.pop_e[skip:])
        jumps.extend(tr.jumps)
        state = tr.final_state
    return TraceResult(np.concatenate(times), np.concatenate(pops), jumps, initial,
                       (0.0, T))


def _or_nan(fn):
    try:
        return fn()
    except (cayley.DegenerateDenominator, ZeroDivisionError):
        return math.nan


def analytics_row(params, protocol, dt, tol=1e-9):
    """Quadrature and first-order closed forms for one sweep point."""
    res = cayley.cayley_statistics(params, protocol, dt, tol=tol)
    row = {
        "lambda0": protocol.lambda0,
        "gamma_down": params.gamma_down,
        "P0": res.P0,
        "P1": res.P1,
        "W1_mean": res.first_moment,
        "W2_mean": res.second_moment,
        "ratio": _or_nan(lambda: cayley.combined_moment_ratio(res)),
        "jarzynski_lhs": res.jarzynski_lhs,
        "jarzynski_rhs": res.jarzynski_rhs,
        "ratio_zero_photon": _or_nan(lambda: res.zero.mean_W2 / res.zero.mean_W),
        "W_mean_zero_photon": res.zero.mean_W,
        "W_mean_one_photon": res.one.mean_W,
        "multi_photon_mass": res.multi_photon_mass,
        "two_photon_bound": res.two_photon_bound,
    }
    try:
        pert = cayley.perturbative_statistics(params, protocol)
    except cayley.NotResonant:
        return row
    row.update({
        "P0_perturbative": pert.zero.P,
        "P1_perturbative": pert.one.P,
        "W1_mean_perturbative": pert.first_moment,
        "W2_mean_perturbative": pert.second_moment,
        "ratio_perturbative": _or_nan(lambda: pert.ratio),
    })
    return row


ANALYTIC_EXTRA = ("ratio_zero_photon", "W_mean_zero_photon", "W_mean_one_photon",
                  "multi_photon_mass", "two_photon_bound", "P0_perturbative",
                  "P1_perturbative", "W1_mean_perturbative", "W2_mean_perturbative",
                  "ratio_perturbative")
MC_EXTRA = ("mc_n", "mc_timeouts", "mc_W1_mean", "mc_W2_mean", "mc_ratio",
            "mc_ratio_se", "mc_jarzynski", "mc_jarzynski_se")


def monte_carlo_row(params, protocol, n, dt, seed, workers=1, n_bootstrap=1000,
                    method="waiting"):
    ens = run_protocol_ensemble(n, params, protocol, dt, seed, method=method,
                                workers=workers)
    s = summarize(ens, params.beta, n_bootstrap=n_bootstrap, rng=seed)
    return {
        "mc_n": s.n,
        "mc_timeouts": ens.n_timeouts,
        "mc_W1_mean": s.mean_W,
        "mc_W2_mean": s.mean_W2,
        "mc_ratio": s.ratio,
        "mc_ratio_se": s.se_ratio,
        "mc_jarzynski": s.jarzynski_mean,
        "mc_jarzynski_se": s.se_jarzynski,
    }


def sweep_rows(beta, n_cycles, lambda0s, gamma_downs, dt, omega=1.0, gamma_up=None,
               monte_carlo=None):
    """One row per (lambda0, gamma_down); ``monte_carlo`` holds kwargs for the MC run."""
    rows = []
    for g in gamma_downs:
        if gamma_up is None:
            params = ModelParams.from_detailed_balance(g, beta)
        else:
            params = ModelParams(beta, g, gamma_up)
        for lam in lambda0s:
            protocol = DriveProtocol(lam, n_cycles, omega)
            row = analytics_row(params, protocol, dt)
            if monte_carlo is not None:
                row.update(monte_carlo_row(params, protocol, dt=dt, **monte_carlo))
            rows.append(row)
    return rows
