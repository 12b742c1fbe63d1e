"""Frequentist baselines: correlated t-test and Wilcoxon signed-rank test.

The correlated t-test inflates the variance of the classic one-sample
t-test by rho / (1 - rho) to account for the overlap of cross-validation
training sets; rho = 0 recovers the textbook test.  The signed-rank test
operates on the per-dataset mean differences.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .data import DiffSeries, MeanDiffVector, ScoreTable, mean_differences, paired_differences
from .errors import DegenerateDataError
from .kernels import LocScaleStudent, normal_cdf, student_sf

__all__ = [
    "TTestResult",
    "WilcoxonResult",
    "correlated_ttest",
    "wilcoxon_signed_rank",
    "pairwise_pvalues",
]


@dataclass(frozen=True)
class TTestResult:
    t: float
    p_two_sided: float
    p_one_sided_greater: float
    dof: int


@dataclass(frozen=True)
class WilcoxonResult:
    t_stat: float
    w: float
    p_two_sided: float
    tie_adjust: float
    exact: bool


def correlated_ttest(d: DiffSeries, mu0: float = 0.0) -> TTestResult:
    """Correlated t-test of H0: mu = mu0 for one dataset's differences.

    The statistic is (mean - mu0) / sqrt(sd^2 (1/n + rho/(1-rho))) with
    n - 1 degrees of freedom.
    """
    if d.sd == 0.0:
        raise DegenerateDataError(
            f"dataset {d.dataset!r}: zero variance, t statistic undefined"
        )
    se = d.sd * np.sqrt(1.0 / d.n + d.rho / (1.0 - d.rho))
    t = (d.mean - mu0) / se
    dist = LocScaleStudent(dof=d.n - 1, loc=0.0, scale2=1.0)
    return TTestResult(
        t=float(t),
        p_two_sided=2.0 * student_sf(abs(t), dist),
        p_one_sided_greater=student_sf(t, dist),
        dof=d.n - 1,
    )


def _rank_abs(values: np.ndarray) -> tuple[np.ndarray, float]:
    """Average ranks of |values| plus the tie adjustment sum(t^3 - t) / 2."""
    a = np.abs(values)
    order = np.argsort(a, kind="stable")
    ranks = np.empty(a.size)
    tie_adjust = 0.0
    i = 0
    while i < a.size:
        j = i
        while j + 1 < a.size and a[order[j + 1]] == a[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        count = j - i + 1
        if count > 1:
            tie_adjust += (count**3 - count) / 2.0
        i = j + 1
    return ranks, tie_adjust


def _exact_two_sided_p(ranks: np.ndarray, t_stat: float) -> float:
    """Enumerate all sign assignments of the ranks (null distribution).

    The null distribution of the positive-rank sum is symmetric about
    q(q+1)/4 even with tied ranks, so the two-sided p-value is the
    probability of being at least as far from the centre as observed.
    """
    q = ranks.size
    centre = q * (q + 1) / 4.0
    observed = abs(t_stat - centre)
    sums = np.zeros(1)
    for r in ranks:
        sums = np.concatenate([sums, sums + r])
    return float(np.mean(np.abs(sums - centre) >= observed - 1e-12))


def wilcoxon_signed_rank(z: MeanDiffVector, exact: bool | None = None) -> WilcoxonResult:
    """Wilcoxon signed-rank test on per-dataset mean differences.

    Zero differences are discarded before ranking (the classic treatment;
    it reproduces the published rank sums for this benchmark family) and
    tied absolute values receive average ranks.  For q <= 10 the exact
    enumerative p-value is used instead of the normal approximation unless
    ``exact=False`` forces the approximation.
    """
    values = z.z[z.z != 0.0]
    q = values.size
    if q == 0:
        # all-zero input: no evidence either way
        return WilcoxonResult(t_stat=0.0, w=0.0, p_two_sided=1.0, tie_adjust=0.0, exact=True)
    ranks, tie_adjust = _rank_abs(values)
    t_stat = float(ranks[values > 0].sum())
    variance = (q * (q + 1) * (2 * q + 1) - tie_adjust) / 24.0
    if variance > 0:
        w = (t_stat - q * (q + 1) / 4.0) / np.sqrt(variance)
    else:
        w = 0.0
    if exact is None:
        exact = q <= 10
    if exact:
        if q > 16:
            raise ValueError(f"exact enumeration is limited to q <= 16, got {q}")
        p = _exact_two_sided_p(ranks, t_stat)
    else:
        if q <= 10:
            warnings.warn(
                f"normal approximation is unreliable for q = {q} <= 10",
                stacklevel=2,
            )
        p = 2.0 * (1.0 - normal_cdf(abs(w)))
    return WilcoxonResult(
        t_stat=t_stat, w=float(w), p_two_sided=min(p, 1.0), tie_adjust=tie_adjust, exact=exact
    )


def pairwise_pvalues(
    table: ScoreTable, classifiers: list[str] | None = None, rho: float | None = None
) -> dict[tuple[str, str], float]:
    """Wilcoxon p-values on mean differences for every unordered pair."""
    if classifiers is None:
        classifiers = list(table.classifiers)
    if len(classifiers) < 2:
        raise ValueError("need at least two classifiers")
    out: dict[tuple[str, str], float] = {}
    for a, b in itertools.combinations(classifiers, 2):
        z = mean_differences(paired_differences(table, a, b, rho=rho))
        out[(a, b)] = wilcoxon_signed_rank(z).p_two_sided
    return out
