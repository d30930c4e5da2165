"""Data models and schemas for the simulation framework."""

from .run_models import RunEntry, RunFile, Judgments, QueryScoreSet
from .mixture_models import LogNormal, LogNormalMixture
from .simulation_models import RngStream, SyntheticRanking, PairedAPSeries, stable_key
from .significance_models import (
    SignificanceTest, ALL_TESTS, ResampleStatistic, TestOutcome, ResampleConfig
)
from .experiment_models import (
    Type1Entry, Type1Report, PowerPoint, PowerCurve, AgreementEntry,
    MapPoint, DeltaAPRecord
)
from .config_models import (
    IngestConfig, SimplexConfig, ExperimentConfig, ValidityConfig,
    SystemConfig, RunManifest, Profile
)

__all__ = [
    # Run models
    "RunEntry",
    "RunFile",
    "Judgments",
    "QueryScoreSet",

    # Mixture models
    "LogNormal",
    "LogNormalMixture",

    # Simulation models
    "RngStream",
    "SyntheticRanking",
    "PairedAPSeries",
    "stable_key",

    # Significance models
    "SignificanceTest",
    "ALL_TESTS",
    "ResampleStatistic",
    "TestOutcome",
    "ResampleConfig",

    # Experiment models
    "Type1Entry",
    "Type1Report",
    "PowerPoint",
    "PowerCurve",
    "AgreementEntry",
    "MapPoint",
    "DeltaAPRecord",

    # Configuration models
    "IngestConfig",
    "SimplexConfig",
    "ExperimentConfig",
    "ValidityConfig",
    "SystemConfig",
    "RunManifest",
    "Profile",
]
