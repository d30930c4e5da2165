"""Paired two-sided significance tests on per-query score differences.

Every test takes the vector d of paired differences and returns a
:class:`TestOutcome`. The resampling tests draw from the stream in their
:class:`ResampleConfig`, so a given stream always yields the same p-value.
"""

import math
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.special import betainc

from ..exceptions import DegenerateVariance, SimulationError, TooFewSamples
from ..models.significance_models import (
    ResampleConfig, ResampleStatistic, SignificanceTest, TestOutcome
)
from ..utils.logging import get_logger

logger = get_logger("stattests")

WILCOXON_EXACT_MAX_N = 20

# Relative slack when comparing resampled statistics with the observed one,
# so that ties which are exact in real arithmetic survive rounding.
_TIE_SLACK = 1e-9

# Sample sd at or below this fraction of |mean| counts as zero variance
_DEGENERATE_SD = 1e-12

ALL_ZERO_NOTE = "all differences are zero"


def _as_array(d: Sequence[float]) -> np.ndarray:
    values = np.asarray(d, dtype=float).ravel()
    if not np.all(np.isfinite(values)):
        raise ValueError("Differences must be finite")
    return values


def t_test_paired(d: Sequence[float]) -> TestOutcome:
    """Paired t-test of mean(d) = 0 against Student's t with n - 1 degrees of freedom."""
    values = _as_array(d)
    n = values.shape[0]
    if n < 2:
        raise TooFewSamples(f"t-test needs at least 2 differences, got {n}")

    if np.all(values == 0):
        return TestOutcome(test_name=SignificanceTest.TTEST, statistic=0.0, p_value=1.0,
                           n_effective=n, note=ALL_ZERO_NOTE)

    mean = float(np.mean(values))
    sd = float(np.std(values, ddof=1))
    # Rounding leaves sd near 1e-17 for differences that are constant in real arithmetic
    if sd <= _DEGENERATE_SD * abs(mean):
        raise DegenerateVariance(f"Differences are constant ({mean!r}); t is undefined")

    t = mean / (sd / math.sqrt(n))
    df = n - 1
    # Two-sided tail of Student's t through the regularized incomplete beta function
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return TestOutcome(test_name=SignificanceTest.TTEST, statistic=t,
                       p_value=min(1.0, max(0.0, p)), n_effective=n)


def signed_rank_null_counts(doubled_ranks: Sequence[int]) -> np.ndarray:
    """Number of sign assignments giving each value of 2 * W+.

    Index k holds how many of the 2^n assignments have doubled positive-rank
    sum k. Doubling keeps average ranks of ties integral.
    """
    ranks = [int(r) for r in doubled_ranks]
    total = sum(ranks)
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_normal_p(w_plus: float, abs_values: np.ndarray) -> float:
    """Normal approximation with tie-corrected variance and continuity correction."""
    n = abs_values.shape[0]
    mean = n * (n + 1) / 4.0
    _, tie_sizes = np.unique(abs_values, return_counts=True)
    variance = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_sizes ** 3 - tie_sizes)) / 48.0
    z = max(0.0, abs(w_plus - mean) - 0.5) / math.sqrt(variance)
    return min(1.0, 2.0 * float(stats.norm.sf(z)))


def wilcoxon_signed_rank(d: Sequence[float]) -> TestOutcome:
    """Wilcoxon signed-rank test; zeros dropped, ties get average ranks.

    Exact over all 2^n sign assignments for n <= 20 nonzero differences,
    normal approximation above.
    """
    values = _as_array(d)
    if values.shape[0] < 1:
        raise TooFewSamples("Wilcoxon test needs at least 1 difference")

    nonzero = values[values != 0]
    n = nonzero.shape[0]
    if n == 0:
        return TestOutcome(test_name=SignificanceTest.WILCOXON, statistic=0.0, p_value=1.0,
                           n_effective=0, exact=True, note=ALL_ZERO_NOTE)

    abs_values = np.abs(nonzero)
    ranks = stats.rankdata(abs_values, method="average")
    w_plus = float(np.sum(ranks[nonzero > 0]))

    if n > WILCOXON_EXACT_MAX_N:
        return TestOutcome(test_name=SignificanceTest.WILCOXON, statistic=w_plus,
                           p_value=wilcoxon_normal_p(w_plus, abs_values), n_effective=n)

    counts = signed_rank_null_counts(np.rint(2 * ranks).astype(np.int64))
    w2 = int(round(2 * w_plus))
    lower = int(counts[:w2 + 1].sum())
    upper = int(counts[w2:].sum())
    p = min(1.0, 2 * min(lower, upper) / 2 ** n)
    return TestOutcome(test_name=SignificanceTest.WILCOXON, statistic=w_plus,
                       p_value=p, n_effective=n, exact=True)


def sign_test(d: Sequence[float]) -> TestOutcome:
    """Exact binomial sign test on the nonzero differences."""
    values = _as_array(d)
    if values.shape[0] < 1:
        raise TooFewSamples("Sign test needs at least 1 difference")

    positives = int(np.sum(values > 0))
    negatives = int(np.sum(values < 0))
    n = positives + negatives
    if n == 0:
        return TestOutcome(test_name=SignificanceTest.SIGN, statistic=0.0, p_value=1.0,
                           n_effective=0, exact=True, note=ALL_ZERO_NOTE)

    k = min(positives, negatives)
    tail = sum(math.comb(n, j) for j in range(k + 1))
    p = min(1.0, 2 * tail / 2 ** n)
    return TestOutcome(test_name=SignificanceTest.SIGN, statistic=float(positives),
                       p_value=p, n_effective=n, exact=True)


def _t_statistics(sums: np.ndarray, sums_sq: np.ndarray, n: int) -> np.ndarray:
    """Paired t statistic from per-resample sums and sums of squares.

    Zero-variance resamples get 0 when their mean is 0 and +-inf otherwise.
    """
    means = sums / n
    variances = np.maximum(sums_sq - n * means * means, 0.0) / (n - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = means / np.sqrt(variances / n)
    return np.where(variances > 0, t, np.where(means == 0, 0.0, np.sign(means) * np.inf))


def _exceedances(resampled: np.ndarray, observed: float, slack: float) -> int:
    return int(np.count_nonzero(np.abs(resampled) >= abs(observed) - slack))


def _chunks(total: int, size: int):
    done = 0
    while done < total:
        step = min(size, total - done)
        yield step
        done += step


def permutation_test(d: Sequence[float], cfg: ResampleConfig) -> TestOutcome:
    """Sign-flip permutation test of the paired differences.

    Enumerates all 2^n sign vectors when n <= ``cfg.exact_threshold``;
    otherwise draws ``cfg.n_resamples`` random sign vectors and reports the
    add-one estimate (1 + exceedances) / (n_resamples + 1).
    """
    values = _as_array(d)
    n = values.shape[0]
    if n < 1:
        raise TooFewSamples("Permutation test needs at least 1 difference")

    use_t = cfg.statistic == ResampleStatistic.T
    if use_t and n < 2:
        raise TooFewSamples("The t statistic needs at least 2 differences")

    sum_sq = float(np.dot(values, values))
    observed_sum = float(np.sum(values))
    if use_t:
        observed = float(_t_statistics(np.array([observed_sum]), np.array([sum_sq]), n)[0])
        slack = _TIE_SLACK * max(1.0, abs(observed)) if np.isfinite(observed) else 0.0
    else:
        observed = observed_sum / n
        slack = _TIE_SLACK * float(np.mean(np.abs(values)))

    def statistic_of(sums: np.ndarray) -> np.ndarray:
        # Sign flips leave the sum of squares unchanged
        if use_t:
            return _t_statistics(sums, np.full(sums.shape, sum_sq), n)
        return sums / n

    if n <= cfg.exact_threshold:
        sums = np.zeros(1)
        for value in values:
            sums = np.concatenate([sums + value, sums - value])
        count = _exceedances(statistic_of(sums), observed, slack)
        return TestOutcome(test_name=SignificanceTest.PERMUTATION, statistic=observed,
                           p_value=count / 2 ** n, n_effective=n, exact=True)

    gen = cfg.rng.generator()
    count = 0
    for block in _chunks(cfg.n_resamples, cfg.chunk_size):
        signs = gen.integers(0, 2, size=(block, n), dtype=np.int8) * 2 - 1
        count += _exceedances(statistic_of(signs.astype(float) @ values), observed, slack)

    p = (1 + count) / (cfg.n_resamples + 1)
    return TestOutcome(test_name=SignificanceTest.PERMUTATION, statistic=observed,
                       p_value=min(1.0, p), n_effective=n)


def bootstrap_test(d: Sequence[float], cfg: ResampleConfig) -> TestOutcome:
    """One-sample bootstrap test of mean(d) = 0.

    The sample is shifted to the null (c = d - mean(d)) and resampled with
    replacement; p = (1 + #{|T*| >= |T|}) / (n_resamples + 1).
    """
    values = _as_array(d)
    n = values.shape[0]
    if n < 1:
        raise TooFewSamples("Bootstrap test needs at least 1 difference")

    use_t = cfg.statistic == ResampleStatistic.T
    if use_t and n < 2:
        raise TooFewSamples("The t statistic needs at least 2 differences")

    mean = float(np.mean(values))
    centered = values - mean
    if use_t:
        observed = float(_t_statistics(np.array([float(np.sum(values))]),
                                       np.array([float(np.dot(values, values))]), n)[0])
        slack = _TIE_SLACK * max(1.0, abs(observed)) if np.isfinite(observed) else 0.0
    else:
        observed = mean
        slack = _TIE_SLACK * float(np.mean(np.abs(values)))

    gen = cfg.rng.generator()
    count = 0
    for block in _chunks(cfg.n_resamples, cfg.chunk_size):
        resamples = centered[gen.integers(0, n, size=(block, n))]
        if use_t:
            resampled = _t_statistics(resamples.sum(axis=1), np.einsum("ij,ij->i", resamples, resamples), n)
        else:
            resampled = resamples.mean(axis=1)
        count += _exceedances(resampled, observed, slack)

    p = (1 + count) / (cfg.n_resamples + 1)
    return TestOutcome(test_name=SignificanceTest.BOOTSTRAP, statistic=observed,
                       p_value=min(1.0, p), n_effective=n)


def run_all_tests(d: Sequence[float], alpha: float, cfg: ResampleConfig) -> List[TestOutcome]:
    """Run the five tests and attach rejection decisions at ``alpha``.

    The permutation and bootstrap tests get disjoint sub-streams of
    ``cfg.rng``. A test that cannot be computed yields an outcome with
    ``error`` set, p = 1 and no rejection.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")

    values = _as_array(d)
    runners: List[Tuple[SignificanceTest, Callable[[], TestOutcome]]] = [
        (SignificanceTest.TTEST, lambda: t_test_paired(values)),
        (SignificanceTest.WILCOXON, lambda: wilcoxon_signed_rank(values)),
        (SignificanceTest.SIGN, lambda: sign_test(values)),
        (SignificanceTest.PERMUTATION,
         lambda: permutation_test(values, cfg.model_copy(update={"rng": cfg.rng.child("permutation")}))),
        (SignificanceTest.BOOTSTRAP,
         lambda: bootstrap_test(values, cfg.model_copy(update={"rng": cfg.rng.child("bootstrap")}))),
    ]

    outcomes = []
    for test_name, runner in runners:
        try:
            outcome = runner()
        except SimulationError as e:
            logger.debug(f"{test_name.value} failed: {e}")
            outcome = TestOutcome(test_name=test_name, statistic=float("nan"), p_value=1.0,
                                  n_effective=values.shape[0], error=str(e))
        outcomes.append(outcome.decide(alpha))

    return outcomes
