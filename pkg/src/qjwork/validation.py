"""Numerical self-checks shared by ``qjwork validate`` and the test-suite."""
from __future__ import annotations

import filecmp
import math
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cayley
from .emit import write_ensemble
from .engine import evolve_no_jump, mean_excited_population
from .master import ReducedDensityMatrix, compare_ensemble, integrate_master
from .model import DriveProtocol, ModelParams, PureState, TWO_PI
from .work import DEFAULT_DT, guardian_excited_probability, guardian_frequency, \
    run_protocol_ensemble

REFERENCE_POINTS = ((0.02, 0.01), (0.05, 0.01), (0.1, 0.02))


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    detail: str = ""

    def line(self):
        vals = ", ".join(f"{k}={_short(v)}" for k, v in self.measured.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {vals}" + (
            f" ({self.detail})" if self.detail else "")


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def broken_detailed_balance(params, factor=1.5):
    """Same model with gamma_up scaled so that detailed balance no longer holds."""
    return ModelParams(params.beta_hbar_omega0, params.gamma_down,
                       params.gamma_up * factor)


def check_master_equivalence(n=10_000, seed=0, beta=1.0, lambda0=0.1, n_cycles=8,
                             gamma_down=0.1, dt=DEFAULT_DT, sample_every=10):
    params = ModelParams.from_detailed_balance(gamma_down, beta)
    protocol = DriveProtocol(lambda0, n_cycles)
    times, mean_pe = mean_excited_population(n, params, protocol, dt, seed,
                                             sample_every=sample_every)
    sol = integrate_master(params, protocol, ReducedDensityMatrix.thermal(beta), times)
    err = compare_ensemble(mean_pe, sol)
    bound = 5.0 / math.sqrt(n)
    return CheckResult("master-equation equivalence", err <= bound,
                       {"sup_error": err, "bound": bound, "N": n})


def guardian_triples(count=10, seed=0):
    """Random ``(p_e(T), gamma_down, beta)`` triples."""
    rng = np.random.default_rng(seed)
    return [(float(rng.uniform(0.02, 0.98)), float(rng.uniform(0.005, 0.2)),
             float(rng.uniform(0.2, 3.0))) for _ in range(count)]


def check_guardian(count=10, n_mc=100_000, seed=0, tol=1e-6):
    worst_q = 0.0
    worst_z = 0.0
    for k, (pe, gdn, beta) in enumerate(guardian_triples(count, seed)):
        params = ModelParams.from_detailed_balance(gdn, beta)
        q = guardian_excited_probability(pe, params)
        worst_q = max(worst_q, abs(q - pe))
        if n_mc:
            freq, n_ok = guardian_frequency(pe, params, n_mc, master_seed=seed + k)
            sigma = math.sqrt(pe * (1.0 - pe) / n_ok)
            worst_z = max(worst_z, abs(freq - pe) / sigma)
    return CheckResult("guardian measurement", worst_q <= tol and worst_z <= 3.0,
                       {"max_quadrature_error": worst_q, "max_mc_sigma": worst_z})


def reverse_identity_residuals(params, protocol):
    return [cayley.reverse_identity_check(params, protocol, n)[2] for n in (0, 1)]


def check_reverse_identity(points=REFERENCE_POINTS, beta=2.0, n_cycles=10, broken=False,
                           tol=1e-6):
    worst = 0.0
    for lam, gdn in points:
        params = ModelParams.from_detailed_balance(gdn, beta)
        if broken:
            params = broken_detailed_balance(params)
        worst = max(worst, *reverse_identity_residuals(params, DriveProtocol(lam, n_cycles)))
    name = "reverse-protocol identity" + (" (detailed balance broken)" if broken else "")
    return CheckResult(name, worst <= tol, {"max_residual": worst, "tol": tol})


def perturbative_discrepancies(lambda0, gamma_down, beta=2.0, n_cycles=10):
    """``|closed form - quadrature|`` for P0, P1, <W>, <W^2>."""
    params = ModelParams.from_detailed_balance(gamma_down, beta)
    protocol = DriveProtocol(lambda0, n_cycles)
    full = cayley.cayley_statistics(params, protocol, reverse=False)
    pert = cayley.perturbative_statistics(params, protocol)
    return np.array([abs(full.P0 - pert.zero.P), abs(full.P1 - pert.one.P),
                     abs(full.first_moment - pert.first_moment),
                     abs(full.second_moment - pert.second_moment)])


def perturbation_order_ratios(lambda0s=(0.02, 0.05, 0.1), beta=2.0):
    return {lam: perturbative_discrepancies(lam, 0.02, beta)
            / perturbative_discrepancies(lam, 0.01, beta) for lam in lambda0s}


def check_perturbation_order(lambda0s=(0.02, 0.05, 0.1), beta=2.0):
    ratios = perturbation_order_ratios(lambda0s, beta)
    flat = np.concatenate(list(ratios.values()))
    ok = bool(np.all((flat >= 2.0) & (flat <= 6.0)))
    return CheckResult("perturbation-order scaling", ok,
                       {"min_ratio": float(flat.min()), "max_ratio": float(flat.max())},
                       "discrepancy(0.02)/discrepancy(0.01), expected 4 +- 50%")


def check_zero_photon_fdt(lambda0s=(0.01, 0.05, 0.1, 0.2), beta=2.0, gamma_down=0.005):
    params = ModelParams.from_detailed_balance(gamma_down, beta)
    target = 1.0 / math.tanh(beta / 2.0)
    worst = 0.0
    for lam in lambda0s:
        z = cayley.p0_statistics(params, DriveProtocol(lam, 10))
        worst = max(worst, abs(z.mean_W2 / z.mean_W - target))
    return CheckResult("zero-photon fluctuation-dissipation ratio", worst <= 1e-9,
                       {"max_deviation": worst, "target": target})


def rk4_convergence_ratio(params=None, lambda0=0.1, base_steps=200, levels=3):
    """Error ratios on successive dt halvings of the no-jump evolution over a pi-pulse.

    The reference solution uses 64x the finest step count.
    """
    params = params or ModelParams.from_detailed_balance(0.1, 1.0)
    protocol = DriveProtocol.pi_pulse(lambda0)
    T = protocol.duration
    start = PureState(math.sqrt(0.7) + 0j, math.sqrt(0.3) + 0j)
    ref = evolve_no_jump(start, (0.0, T), params, protocol, T / (base_steps * 2 ** (levels + 6)))
    errs = []
    for k in range(levels + 1):
        s = evolve_no_jump(start, (0.0, T), params, protocol, T / (base_steps * 2 ** k))
        errs.append(math.hypot(abs(s.a - ref.a), abs(s.b - ref.b)))
    return [errs[k] / errs[k + 1] for k in range(levels)]


def ensemble_csv_bytes(workers, n=20_000, seed=7, out_dir=None):
    params = ModelParams.from_detailed_balance(0.01, 1.0)
    protocol = DriveProtocol(0.05, 10)
    ens = run_protocol_ensemble(n, params, protocol, master_seed=seed, workers=workers)
    path = Path(out_dir) / f"ensemble_w{workers}.csv"
    write_ensemble(path, ens)
    return path


def check_determinism(workers=(1, 4, 8), n=20_000, seed=7):
    with tempfile.TemporaryDirectory() as tmp:
        paths = [ensemble_csv_bytes(w, n, seed, tmp) for w in workers]
        identical = all(filecmp.cmp(paths[0], p, shallow=False) for p in paths[1:])
    ratios = rk4_convergence_ratio()
    ok = identical and all(12.0 <= r <= 20.0 for r in ratios)
    return CheckResult("determinism and RK4 order", ok,
                       {"csv_identical": identical, "workers": list(workers),
                        "error_ratios": ratios})


def run_all(n_master=10_000, n_guardian=100_000, seed=0, workers=(1, 4, 8),
            broken_detailed_balance=False):
    return [
        check_zero_photon_fdt(),
        check_master_equivalence(n=n_master, seed=seed),
        check_guardian(n_mc=n_guardian, seed=seed),
        check_reverse_identity(broken=broken_detailed_balance),
        check_perturbation_order(),
        check_determinism(workers=workers, seed=seed + 7),
    ]
