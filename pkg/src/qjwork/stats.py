"""Work histograms, moments and the Jarzynski estimator with bootstrap errors.

Every statistic depends on the realizations only through the integer work
histogram, so bootstrap replicates are drawn as multinomial resamples of the
bin counts.  Sums run over sorted bins, which makes the results independent of
how the ensemble was split across workers.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class WorkHistogram:
    """Counts over integer work values W / hbar omega0 (bins sorted ascending)."""

    bins: tuple
    counts: tuple

    def __post_init__(self):
        if len(self.bins) != len(self.counts):
            raise ValueError("bins and counts differ in length")
        if any(c < 0 for c in self.counts):
            raise ValueError("negative count")
        if list(self.bins) != sorted(set(self.bins)):
            raise ValueError("bins must be unique and ascending")

    @classmethod
    def from_counts(cls, mapping):
        items = sorted((int(k), int(v)) for k, v in mapping.items() if v)
        return cls(tuple(k for k, _ in items), tuple(v for _, v in items))

    @property
    def total(self):
        return sum(self.counts)

    @property
    def occupied(self):
        return tuple(b for b, c in zip(self.bins, self.counts) if c > 0)

    def as_dict(self):
        return dict(zip(self.bins, self.counts))

    def fractions(self):
        n = self.total
        return {b: Fraction(c, n) for b, c in zip(self.bins, self.counts)}

    def probabilities(self):
        n = self.total
        return {b: c / n for b, c in zip(self.bins, self.counts)}

    def probability(self, w):
        return self.as_dict().get(int(w), 0) / self.total

    def mass_outside(self, values):
        keep = set(int(v) for v in values)
        n_out = sum(c for b, c in zip(self.bins, self.counts) if b not in keep)
        return n_out / self.total

    def __add__(self, other):
        merged = Counter(self.as_dict())
        merged.update(other.as_dict())
        return WorkHistogram.from_counts(merged)


def _work_values(records):
    """Integer work array from a WorkEnsemble, WorkRecord iterable or numbers."""
    if hasattr(records, "work") and isinstance(getattr(records, "work"), np.ndarray):
        return np.asarray(records.work, dtype=np.int64)
    records = list(records) if not isinstance(records, np.ndarray) else records
    if len(records) and hasattr(records[0], "W"):
        return np.array([r.W for r in records], dtype=np.int64)
    arr = np.asarray(records)
    if arr.size and not np.all(arr == np.round(arr)):
        raise ValueError("work values must be integer multiples of hbar omega0")
    return arr.astype(np.int64)


def histogram(records):
    w = _work_values(records)
    values, counts = np.unique(w, return_counts=True)
    return WorkHistogram(tuple(int(v) for v in values), tuple(int(c) for c in counts))


def _boltzmann(values, beta):
    with np.errstate(over="ignore"):
        return np.exp(-beta * values.astype(float))


@dataclass
class EnsembleSummary:
    n: int
    beta: float
    mean_W: float
    mean_W2: float
    ratio: float
    jarzynski_mean: float
    se_mean_W: float
    se_mean_W2: float
    se_ratio: float
    se_jarzynski: float
    ci_mean_W: tuple
    ci_mean_W2: tuple
    ci_ratio: tuple
    ci_jarzynski: tuple
    ratio_undefined: bool
    histogram: WorkHistogram = field(repr=False, default=None)

    def consistent_with(self, quantity, value, n_sigma=3.0):
        """``|estimate - value| <= n_sigma * bootstrap SE`` for a named statistic."""
        est = getattr(self, quantity)
        se = getattr(self, {"mean_W": "se_mean_W", "mean_W2": "se_mean_W2",
                            "ratio": "se_ratio",
                            "jarzynski_mean": "se_jarzynski"}[quantity])
        return abs(est - value) <= n_sigma * se

    def as_dict(self):
        return {k: getattr(self, k) for k in (
            "n", "beta", "mean_W", "mean_W2", "ratio", "jarzynski_mean",
            "se_mean_W", "se_mean_W2", "se_ratio", "se_jarzynski",
            "ci_mean_W", "ci_mean_W2", "ci_ratio", "ci_jarzynski",
            "ratio_undefined")}


def _weighted_mean(values, counts, n):
    return math.fsum(float(v) * c for v, c in zip(values, counts)) / n


def summarize(records, beta, n_bootstrap=1000, rng=None, confidence=0.95):
    """Plug-in estimators with percentile bootstrap intervals.

    ``rng`` is a seed or ``numpy.random.Generator``; the bootstrap is seeded
    from the histogram alone when it is None, so repeated calls agree.
    """
    hist = records if isinstance(records, WorkHistogram) else histogram(records)
    n = hist.total
    if n == 0:
        raise ValueError("cannot summarize an empty ensemble")
    if n_bootstrap < 1:
        raise ValueError("n_bootstrap must be positive")
    values = np.array(hist.bins, dtype=np.int64)
    counts = np.array(hist.counts, dtype=np.int64)
    boltz = _boltzmann(values, beta)

    s1 = int(np.dot(values, counts))
    s2 = int(np.dot(values * values, counts))
    mean_W = s1 / n
    mean_W2 = s2 / n
    jar = _weighted_mean(boltz, counts, n)
    ratio = mean_W2 / mean_W if s1 != 0 else math.nan

    if not isinstance(rng, np.random.Generator):
        seed = rng if rng is not None else [n, *hist.bins, *hist.counts]
        rng = np.random.default_rng(np.abs(np.asarray(seed, dtype=np.int64)))
    reps = rng.multinomial(n, counts / n, size=n_bootstrap)
    b1 = reps @ values
    b2 = reps @ (values * values)
    bj = reps @ boltz / n
    with np.errstate(divide="ignore", invalid="ignore"):
        br = np.where(b1 != 0, b2 / np.where(b1 != 0, b1, 1), np.nan)
    b1 = b1 / n
    b2 = b2 / n

    alpha = 0.5 * (1.0 - confidence)
    q = [100 * alpha, 100 * (1 - alpha)]

    def ci(x):
        x = x[np.isfinite(x)]
        if x.size == 0:
            return (math.nan, math.nan)
        lo, hi = np.percentile(x, q)
        return (float(lo), float(hi))

    def se(x):
        x = x[np.isfinite(x)]
        return float(np.std(x, ddof=1)) if x.size > 1 else math.nan

    se1 = se(b1)
    undefined = s1 == 0 or abs(mean_W) < 3.0 * se1
    return EnsembleSummary(
        n=n, beta=float(beta), mean_W=mean_W, mean_W2=mean_W2, ratio=ratio,
        jarzynski_mean=jar, se_mean_W=se1, se_mean_W2=se(b2),
        se_ratio=se(br) if not undefined else math.nan, se_jarzynski=se(bj),
        ci_mean_W=ci(b1), ci_mean_W2=ci(b2),
        ci_ratio=ci(br) if not undefined else (math.nan, math.nan),
        ci_jarzynski=ci(bj), ratio_undefined=bool(undefined), histogram=hist)


def conditional_mean_work(ensemble, n_jumps):
    """Mean work and its standard error among realizations with exactly ``n_jumps``."""
    valid = ensemble.valid
    sel = valid & (ensemble.n_emit + ensemble.n_absorb == n_jumps)
    w = ensemble.all_work[sel].astype(float)
    if w.size < 2:
        return math.nan, math.nan, int(w.size)
    return float(w.mean()), float(w.std(ddof=1) / math.sqrt(w.size)), int(w.size)
