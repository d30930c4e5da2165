"""Significance-test data models."""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from .simulation_models import RngStream


class SignificanceTest(str, Enum):
    """The five paired two-sided tests."""
    TTEST = "ttest"
    WILCOXON = "wilcoxon"
    SIGN = "sign"
    PERMUTATION = "permutation"
    BOOTSTRAP = "bootstrap"


ALL_TESTS = [
    SignificanceTest.TTEST,
    SignificanceTest.WILCOXON,
    SignificanceTest.SIGN,
    SignificanceTest.PERMUTATION,
    SignificanceTest.BOOTSTRAP,
]


class ResampleStatistic(str, Enum):
    """Statistic used by the permutation and bootstrap tests."""
    MEAN = "mean"  # difference of means
    T = "t"  # paired t statistic


class TestOutcome(BaseModel):
    """Result of one significance test on a vector of paired differences."""

    __test__ = False

    test_name: SignificanceTest = Field(..., description="Which test produced this outcome")
    statistic: float = Field(..., description="Observed test statistic")
    p_value: float = Field(..., ge=0.0, le=1.0, description="Two-sided p-value")
    n_effective: int = Field(..., ge=0, description="Pairs used after zero handling")
    reject: Optional[bool] = Field(default=None, description="Decision at alpha, when an alpha was given")
    alpha: Optional[float] = Field(default=None, gt=0.0, lt=1.0, description="Significance level of the decision")
    exact: bool = Field(default=False, description="Whether the p-value comes from full enumeration")
    error: Optional[str] = Field(default=None, description="Error annotation when the test could not be computed")
    note: Optional[str] = Field(default=None, description="Additional remark, e.g. all differences zero")

    def decide(self, alpha: float) -> 'TestOutcome':
        """Return a copy carrying the rejection decision at ``alpha``."""
        reject = self.error is None and self.p_value <= alpha
        return self.model_copy(update={"reject": reject, "alpha": alpha})


class ResampleConfig(BaseModel):
    """Settings of the Monte Carlo resampling tests."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    n_resamples: int = Field(default=100_000, ge=1, description="Number of random permutations or bootstrap resamples")
    rng: RngStream = Field(default_factory=lambda: RngStream(0), description="Random stream for resampling")
    statistic: ResampleStatistic = Field(default=ResampleStatistic.MEAN, description="Resampling statistic")
    exact_threshold: int = Field(default=20, ge=0, description="Largest n for which the permutation test enumerates all sign vectors")
    chunk_size: int = Field(default=10_000, gt=0, description="Resamples drawn per vectorised block")
