"""TREC run and relevance-judgment data models."""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, NamedTuple, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


class RunEntry(NamedTuple):
    """One retrieved document of a run."""
    query_id: str
    doc_id: str
    rank: int
    score: float


@dataclass
class RunFile:
    """A system's ranked, scored document lists, grouped by query.

    Query order follows first appearance in the source file.
    """
    system_tag: str
    queries: Dict[str, List[RunEntry]] = field(default_factory=dict)

    @property
    def entries(self) -> List[RunEntry]:
        """All entries, query by query."""
        return [entry for entries in self.queries.values() for entry in entries]

    @property
    def query_ids(self) -> List[str]:
        return list(self.queries.keys())

    def scores(self) -> Iterator[float]:
        for entries in self.queries.values():
            for entry in entries:
                yield entry.score

    def n_entries(self) -> int:
        return sum(len(entries) for entries in self.queries.values())


@dataclass
class Judgments:
    """Binary relevance judgments keyed by (query_id, doc_id).

    A pair that was never assessed is unjudged, which :meth:`lookup`
    reports as ``None`` rather than 0.
    """
    labels: Dict[str, Dict[str, int]] = field(default_factory=dict)

    def lookup(self, query_id: str, doc_id: str) -> Optional[int]:
        return self.labels.get(query_id, {}).get(doc_id)

    def set(self, query_id: str, doc_id: str, relevance: int) -> None:
        self.labels.setdefault(query_id, {})[doc_id] = 1 if relevance > 0 else 0

    @property
    def query_ids(self) -> List[str]:
        return list(self.labels.keys())

    def __len__(self) -> int:
        return sum(len(docs) for docs in self.labels.values())


class QueryScoreSet(BaseModel):
    """Retrieved scores of one query, partitioned by relevance."""

    query_id: str = Field(..., description="Query identifier")
    relevant_scores: List[float] = Field(default_factory=list, description="Scores of judged-relevant retrieved documents")
    nonrelevant_scores: List[float] = Field(default_factory=list, description="Scores of judged non-relevant and unjudged retrieved documents")
    n_retrieved: int = Field(..., ge=0, description="Number of retrieved documents after truncation")

    @field_validator('relevant_scores', 'nonrelevant_scores')
    @classmethod
    def validate_positive(cls, v):
        """Log-normal support requires strictly positive scores."""
        if any(s <= 0 for s in v):
            raise ValueError("Scores must be strictly positive; shift the run first")
        return v

    @model_validator(mode='after')
    def validate_partition(self):
        if len(self.relevant_scores) + len(self.nonrelevant_scores) != self.n_retrieved:
            raise ValueError("relevant and non-relevant scores must add up to n_retrieved")
        return self

    @property
    def relevant_fraction(self) -> float:
        if self.n_retrieved == 0:
            return 0.0
        return len(self.relevant_scores) / self.n_retrieved
