import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from qjwork.engine import JumpEvent
from qjwork.model import DriveProtocol, ModelParams, PureState
from qjwork.rng import RngStream
from qjwork.work import (GuardianTimeout, WorkEnsemble, guardian_excited_probability,
                         guardian_frequency, guardian_horizon, heat_from_jumps,
                         measure_by_guardian, relaxation_pe, run_protocol_ensemble,
                         sample_initial_state)

ISOLATED = ModelParams(1.0, 0.0, 0.0)


def test_relaxation_law_matches_no_jump_ode():
    dg = 0.15
    sol = solve_ivp(lambda t, y: [-dg * y[0] * (1 - y[0])], (0, 20), [0.8],
                    t_eval=np.linspace(0, 20, 11), rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(relaxation_pe(0.8, dg, sol.t), sol.y[0], atol=1e-10)
    assert relaxation_pe(1.0, dg, 5.0) == 1.0


@settings(max_examples=10, deadline=None)
@given(pe=st.floats(0.01, 0.99), gdn=st.floats(0.005, 0.3), beta=st.floats(0.1, 3.0))
def test_guardian_quadrature_returns_population(pe, gdn, beta):
    params = ModelParams.from_detailed_balance(gdn, beta)
    assert guardian_excited_probability(pe, params) == pytest.approx(pe, abs=1e-6)


def test_guardian_quadrature_edge_cases():
    p = ModelParams.from_detailed_balance(0.1, 1.0)
    assert guardian_excited_probability(0.0, p) == 0.0
    with pytest.raises(ValueError):
        guardian_excited_probability(0.5, ISOLATED)


def test_guardian_symmetric_rates():
    freq, n = guardian_frequency(0.5, ModelParams(0.0, 0.1, 0.1), 100_000, master_seed=4)
    assert abs(freq - 0.5) <= 3 * math.sqrt(0.25 / n)


def test_guardian_excited_without_absorption():
    p = ModelParams.from_detailed_balance(0.1, math.inf)
    for s in range(50):
        label, wait = measure_by_guardian(PureState.excited(), p, RngStream(1, s))
        assert label == "e" and wait > 0


def test_guardian_timeout():
    p = ModelParams.from_detailed_balance(0.1, math.inf)
    with pytest.raises(GuardianTimeout):
        measure_by_guardian(PureState.ground(), p, RngStream(0, 0), horizon=10.0)


def test_guardian_horizon_keeps_miss_probability_small():
    for beta in (0.5, 1.0, 2.0, 3.0):
        p = ModelParams.from_detailed_balance(0.01, beta)
        h = guardian_horizon(p)
        assert h >= 50 / p.gamma_sigma
        assert math.exp(-min(p.gamma_up, p.gamma_down) * h) <= 1e-6 * (1 + 1e-9)


def test_isolated_guardian_is_born_rule():
    s = PureState(math.sqrt(0.3) + 0j, math.sqrt(0.7) + 0j)
    labels = [measure_by_guardian(s, ISOLATED, RngStream(2, k))[0] for k in range(20_000)]
    f = labels.count("e") / len(labels)
    assert abs(f - 0.7) < 3 * math.sqrt(0.21 / len(labels))


def test_heat_from_jumps():
    jumps = [JumpEvent(1.0, "emission"), JumpEvent(2.0, "emission"),
             JumpEvent(3.0, "absorption"), JumpEvent(11.0, "emission")]
    assert heat_from_jumps(jumps, 10.0) == 1


def test_sample_initial_state():
    with pytest.raises(ValueError):
        sample_initial_state(1.5, RngStream(0, 0))
    labels = [sample_initial_state(0.731, RngStream(0, k)) for k in range(5000)]
    assert abs(labels.count("g") / 5000 - 0.731) < 0.02


def test_isolated_pi_pulse_flips():
    pr = DriveProtocol.pi_pulse(0.05)
    ens = run_protocol_ensemble(50_000, ModelParams.from_detailed_balance(0.0, 1.0), pr)
    assert np.all(ens.heat == 0)
    flipped = ens.final != ens.initial
    # counter-rotating terms leave a 1.4e-3 chance of no flip
    assert abs(1 - flipped.mean() - 1.4064e-3) < 4 * math.sqrt(1.4e-3 / 5e4)
    w = ens.work[flipped[ens.valid]]
    init = ens.initial[ens.valid][flipped[ens.valid]]
    assert np.all(w == np.where(init == 0, 1, -1))
    assert ens.metadata["isolated"]


def test_gibbs_weights_of_pi_pulse():
    ens = run_protocol_ensemble(100_000, ModelParams.from_detailed_balance(0.0, 1.0),
                                DriveProtocol.pi_pulse(0.05), master_seed=3)
    n = len(ens)
    p_plus = np.mean(ens.work == 1)
    sigma = math.sqrt(0.731 * 0.269 / n)
    assert abs(p_plus - 0.731 * 0.99859) < 3 * sigma


def test_work_balance_and_records():
    ens = run_protocol_ensemble(2000, ModelParams.from_detailed_balance(0.05, 1.0),
                                DriveProtocol(0.1, 4), master_seed=1)
    for r in ens.records():
        assert r.W == (r.final == "e") - (r.initial == "e") + r.Q
        assert r.Q == r.n_emit - r.n_absorb
        assert r.n_jumps_during_drive == r.n_emit + r.n_absorb
    assert len(list(ens.records())) == len(ens)


def test_worker_count_invariance():
    args = (3000, ModelParams.from_detailed_balance(0.02, 1.0), DriveProtocol(0.05, 10))
    a = run_protocol_ensemble(*args, master_seed=8, workers=1)
    b = run_protocol_ensemble(*args, master_seed=8, workers=3)
    for name in ("initial", "final", "n_emit", "n_absorb", "timeout"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_index_offset_reproduces_slice():
    args = (ModelParams.from_detailed_balance(0.02, 1.0), DriveProtocol(0.05, 10))
    full = run_protocol_ensemble(1000, *args, master_seed=2)
    tail = run_protocol_ensemble(400, *args, master_seed=2, start=600)
    np.testing.assert_array_equal(full.all_work[600:], tail.all_work)
    np.testing.assert_array_equal(tail.indices, np.arange(600, 1000))


def test_waiting_and_step_samplers_agree():
    p = ModelParams.from_detailed_balance(0.05, 1.0)
    pr = DriveProtocol(0.1, 3)
    a = run_protocol_ensemble(20_000, p, pr, master_seed=1, method="waiting")
    b = run_protocol_ensemble(20_000, p, pr, master_seed=2, method="step")
    values = np.arange(-4, 5)
    ca = np.array([np.sum(a.work == v) for v in values])
    cb = np.array([np.sum(b.work == v) for v in values])
    keep = (ca + cb) > 20
    chi2 = np.sum((ca[keep] - cb[keep]) ** 2 / (ca[keep] + cb[keep]))
    # chi-square with <= 8 dof; 99.9% quantile is 26.1
    assert chi2 < 26.1


def test_unknown_method_and_bad_n():
    p = ModelParams.from_detailed_balance(0.05, 1.0)
    with pytest.raises(ValueError):
        run_protocol_ensemble(10, p, DriveProtocol(0.1, 1), method="magic")
    with pytest.raises(ValueError):
        run_protocol_ensemble(0, p, DriveProtocol(0.1, 1))


def test_concatenate():
    z = np.zeros(2, np.int64)
    a = WorkEnsemble(z, z + 1, z, z, np.zeros(2, bool))
    b = WorkEnsemble(z + 1, z, z, z + 1, np.array([False, True]))
    c = WorkEnsemble.concatenate([a, b])
    assert len(c) == 3 and c.n_timeouts == 1
    np.testing.assert_array_equal(c.work, [1, 1, -2])
