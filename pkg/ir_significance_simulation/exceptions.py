"""Exception hierarchy for the simulation framework."""

from typing import Optional


class SimulationError(Exception):
    """Base class for every error raised by the framework."""


class ConfigurationError(SimulationError):
    """Invalid configuration, manifest or command-line input."""


# Ingestion


class MalformedLine(SimulationError):
    """A run or qrels line could not be parsed."""

    def __init__(self, line_number: int, reason: str, source: Optional[str] = None):
        self.line_number = line_number
        self.reason = reason
        self.source = source
        where = f"{source}:{line_number}" if source else f"line {line_number}"
        super().__init__(f"Malformed line at {where}: {reason}")


class EmptyRun(SimulationError):
    """A run file contained no entries."""


class NoRelevantRetrieved(SimulationError):
    """A query retrieved no judged-relevant document."""

    def __init__(self, query_id: str):
        self.query_id = query_id
        super().__init__(f"No judged-relevant document retrieved for query {query_id}")


# Fitting


class DomainError(SimulationError):
    """A density was evaluated outside its support."""


class NonFiniteObjective(SimulationError):
    """The objective was not finite on the initial simplex."""


class FitError(SimulationError):
    """Base class for fitting failures; carries the mixture component tag."""

    def __init__(self, message: str, component: Optional[str] = None):
        self.component = component
        self.message = message
        prefix = f"[{component}] " if component else ""
        super().__init__(f"{prefix}{message}")

    def tagged(self, component: str) -> "FitError":
        """Return a copy of this error tagged with a component identity."""
        return type(self)(self.message, component=component)


class DegenerateData(FitError):
    """All observations are equal, so the log-scale variance is zero."""


class TooFewSamples(FitError):
    """Not enough observations to estimate the parameters."""


# Simulation


class MissingModel(SimulationError):
    """A query has no fitted mixture."""

    def __init__(self, query_id: str):
        self.query_id = query_id
        super().__init__(f"No mixture available for query {query_id}")


class SubsetTooLarge(SimulationError):
    """A query subset larger than the query set was requested."""


# Significance tests


class DegenerateVariance(SimulationError):
    """Differences have zero variance but a non-zero mean."""


# Experiments


class AllTrialsFailed(SimulationError):
    """Every test failed numerically in every trial of an experiment."""
