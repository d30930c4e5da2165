"""Score-distribution model types."""

from typing import Any, Dict

from pydantic import BaseModel, ConfigDict, Field


class LogNormal(BaseModel):
    """Log-normal distribution parameterised on the log scale."""

    model_config = ConfigDict(frozen=True)

    mu: float = Field(..., description="Location on the log scale")
    sigma: float = Field(..., gt=0.0, description="Scale on the log scale")


class LogNormalMixture(BaseModel):
    """Two-component log-normal score distribution of one (system, query).

    ``lam`` is the mixture weight: the proportion of relevant documents and
    the probability that a sampled score comes from ``l1``.
    """

    model_config = ConfigDict(frozen=True)

    lam: float = Field(..., ge=0.0, le=1.0, description="Mixture weight of the relevant component")
    l1: LogNormal = Field(..., description="Relevant-document score distribution P(s|1)")
    l0: LogNormal = Field(..., description="Non-relevant-document score distribution P(s|0)")

    def to_row(self) -> Dict[str, float]:
        return {
            "lambda": self.lam,
            "mu1": self.l1.mu,
            "sigma1": self.l1.sigma,
            "mu0": self.l0.mu,
            "sigma0": self.l0.sigma,
        }

    @classmethod
    def from_row(cls, row: Dict[str, Any]) -> 'LogNormalMixture':
        """Build a mixture from a flat mapping with lambda/mu1/sigma1/mu0/sigma0 keys."""
        return cls(
            lam=float(row["lambda"]),
            l1=LogNormal(mu=float(row["mu1"]), sigma=float(row["sigma1"])),
            l0=LogNormal(mu=float(row["mu0"]), sigma=float(row["sigma0"])),
        )
