import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qjwork.model import DriveProtocol, ModelParams
from qjwork.stats import WorkHistogram, histogram, summarize
from qjwork.work import WorkRecord, run_protocol_ensemble


def detailed_balance_sample(n, beta, seed):
    """W in {-1, +1} with P(-1)/P(+1) = exp(-beta): exactly <exp(-beta W)> = 1."""
    p_minus = math.exp(-beta) / (1 + math.exp(-beta))
    rng = np.random.default_rng(seed)
    return np.where(rng.random(n) < p_minus, -1, 1)


@given(st.lists(st.integers(-6, 6), min_size=1, max_size=300))
def test_histogram_counts_and_exact_probabilities(ws):
    h = histogram(ws)
    assert h.total == len(ws)
    assert sum(h.fractions().values()) == Fraction(1)
    assert list(h.bins) == sorted(set(ws))


@given(st.lists(st.integers(-6, 6), min_size=2, max_size=300), st.integers(1, 299))
def test_histogram_merge_is_exact(ws, cut):
    cut = min(cut, len(ws) - 1)
    assert histogram(ws[:cut]) + histogram(ws[cut:]) == histogram(ws)


def test_histogram_validation():
    with pytest.raises(ValueError):
        WorkHistogram((1, 0), (1, 1))
    with pytest.raises(ValueError):
        histogram([0.5])
    h = WorkHistogram.from_counts({2: 3, -1: 1, 0: 0})
    assert h.bins == (-1, 2) and h.probability(2) == 0.75 and h.probability(7) == 0.0
    assert h.mass_outside((-1, 1)) == 0.75


def test_histogram_from_records():
    recs = [WorkRecord("g", "e", 0, 1, 0), WorkRecord("e", "g", 0, -1, 0),
            WorkRecord("g", "e", 0, 1, 0)]
    assert histogram(recs).as_dict() == {-1: 1, 1: 2}


def test_all_zero_work():
    s = summarize(np.zeros(1000, dtype=int), 1.0)
    assert s.jarzynski_mean == 1.0
    assert s.ratio_undefined
    assert math.isnan(s.ratio)


def test_empty_input():
    with pytest.raises(ValueError):
        summarize([], 1.0)


def test_isolated_pi_pulse_jarzynski():
    p_g = 1 / (1 + math.exp(-1.0))
    assert p_g * math.exp(-1.0) + (1 - p_g) * math.exp(1.0) == pytest.approx(1.0)
    w = np.where(np.random.default_rng(0).random(100_000) < p_g, 1, -1)
    s = summarize(w, 1.0, rng=1)
    assert s.consistent_with("jarzynski_mean", 1.0)
    assert s.ci_jarzynski[0] < s.jarzynski_mean < s.ci_jarzynski[1]


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_synthetic_detailed_balance_jarzynski(beta):
    s = summarize(detailed_balance_sample(50_000, beta, int(beta * 10)), beta, rng=0)
    assert abs(s.jarzynski_mean - 1.0) <= 3 * s.se_jarzynski


def test_driven_point_jarzynski():
    ens = run_protocol_ensemble(100_000, ModelParams.from_detailed_balance(0.01, 2.0),
                                DriveProtocol(0.05, 10), master_seed=11)
    s = summarize(ens, 2.0, rng=0)
    assert s.consistent_with("jarzynski_mean", 1.0)


def test_bootstrap_error_scales_as_inverse_sqrt_n():
    se = [summarize(detailed_balance_sample(n, 1.0, n), 1.0, n_bootstrap=400, rng=1).se_mean_W
          for n in (1000, 10_000, 100_000)]
    for small, large in zip(se, se[1:]):
        assert 2.2 < small / large < 4.5


def test_bootstrap_interval_coverage_of_isolated_ratio():
    """95% percentile intervals cover coth(beta/2) for the two-valued distribution."""
    beta = 1.0
    target = 1 / math.tanh(beta / 2)
    hits = 0
    for k in range(100):
        s = summarize(detailed_balance_sample(4000, beta, 1000 + k), beta,
                      n_bootstrap=500, rng=k)
        hits += s.ci_ratio[0] <= target <= s.ci_ratio[1]
    assert hits >= 93


def test_summary_is_deterministic_and_order_free():
    w = detailed_balance_sample(5000, 1.0, 3)
    a = summarize(w, 1.0)
    b = summarize(w[::-1].copy(), 1.0)
    assert a.as_dict() == b.as_dict()


def test_ratio_flag_threshold():
    w = np.array([1, -1] * 500 + [1])
    s = summarize(w, 1.0, rng=0)
    assert s.ratio_undefined and math.isnan(s.se_ratio)
