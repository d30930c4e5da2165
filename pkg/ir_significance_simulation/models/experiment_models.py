"""Experiment report models."""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

from .significance_models import SignificanceTest


class Type1Entry(BaseModel):
    """Rejection rate of one test at one (alpha, query-set size) under H0."""

    test: SignificanceTest
    alpha: float = Field(..., gt=0.0, lt=1.0)
    n_queries: int = Field(..., ge=1)
    rejections: int = Field(..., ge=0)
    n_trials: int = Field(..., ge=0)
    rejection_rate: float = Field(..., ge=0.0, le=1.0)
    monte_carlo_stderr: float = Field(..., ge=0.0)
    errors: int = Field(default=0, ge=0, description="Trials in which the test could not be computed")

    @model_validator(mode='after')
    def validate_rate(self):
        if self.rejections > self.n_trials:
            raise ValueError("rejections cannot exceed n_trials")
        return self


class PowerPoint(BaseModel):
    """Rejection rate of one test at one (h, query-set size)."""

    test: SignificanceTest
    h: float = Field(..., ge=0.0)
    n_queries: int = Field(..., ge=1)
    rejections: int = Field(..., ge=0)
    n_trials: int = Field(..., ge=0)
    p_reject: float = Field(..., ge=0.0, le=1.0)
    errors: int = Field(default=0, ge=0)


class AgreementEntry(BaseModel):
    """Fraction of trials in which two tests made the same decision."""

    test_a: SignificanceTest
    test_b: SignificanceTest
    h: float = Field(default=0.0, ge=0.0)
    n_queries: int = Field(..., ge=1)
    agreement: float = Field(..., ge=0.0, le=1.0)
    n_trials: int = Field(..., ge=0)


class Type1Report(BaseModel):
    """Type-I error estimates indexed by (test, alpha, query-set size)."""

    entries: List[Type1Entry] = Field(default_factory=list)
    per_system: Dict[str, List[Type1Entry]] = Field(default_factory=dict, description="Per-system rates, before averaging")
    agreement: List[AgreementEntry] = Field(default_factory=list)

    def rate(self, test: SignificanceTest, alpha: float, n_queries: int) -> Optional[float]:
        for entry in self.entries:
            if entry.test == test and entry.n_queries == n_queries and abs(entry.alpha - alpha) < 1e-12:
                return entry.rejection_rate
        return None


class PowerCurve(BaseModel):
    """Power estimates indexed by (test, h, query-set size)."""

    alpha: float = Field(..., gt=0.0, lt=1.0)
    points: List[PowerPoint] = Field(default_factory=list)
    agreement: List[AgreementEntry] = Field(default_factory=list)

    def curve(self, test: SignificanceTest, n_queries: int) -> List[PowerPoint]:
        """Points of one test and query-set size, ordered by h."""
        selected = [p for p in self.points if p.test == test and p.n_queries == n_queries]
        return sorted(selected, key=lambda p: p.h)

    def p_reject(self, test: SignificanceTest, h: float, n_queries: int) -> Optional[float]:
        for point in self.points:
            if point.test == test and point.n_queries == n_queries and abs(point.h - h) < 1e-12:
                return point.p_reject
        return None


class MapPoint(BaseModel):
    """Mean AP of the scaled models at one h."""

    h: float = Field(..., ge=0.0)
    mean_ap: float = Field(..., ge=0.0, le=1.0)


class DeltaAPRecord(BaseModel):
    """Relative AP change of one simulated (system, query) pair."""

    system: str
    query: str
    rep: int = Field(..., ge=0)
    delta_ap_pct: Optional[float] = Field(default=None, description="100 * (AP_scaled - AP_base) / AP_base")
    base_zero: bool = Field(default=False, description="AP_base was 0, so no percentage exists")
