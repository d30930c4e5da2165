"""Synthetic ranking, paired-series and random-stream models."""

import hashlib
from dataclasses import dataclass, field
from typing import List, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


def stable_key(value: Union[str, int]) -> int:
    """Map an identifier to a non-negative 32-bit stream key.

    Strings are hashed so that keys do not depend on interpreter hash seeds.
    """
    if isinstance(value, (int, np.integer)):
        if value < 0:
            raise ValueError("Stream keys must be non-negative")
        return int(value)
    return int(hashlib.md5(str(value).encode("utf-8")).hexdigest()[:8], 16)


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream addressed by ``master_seed`` and a key path.

    Identical (master_seed, stream_id) pairs always produce identical draws,
    regardless of which worker evaluates them or in what order.
    """
    master_seed: int
    stream_id: Tuple[int, ...] = field(default_factory=tuple)

    def child(self, *keys: Union[str, int]) -> 'RngStream':
        """Derive a sub-stream by extending the key path."""
        return RngStream(self.master_seed, self.stream_id + tuple(stable_key(k) for k in keys))

    def generator(self) -> np.random.Generator:
        seed_seq = np.random.SeedSequence(self.master_seed, spawn_key=self.stream_id)
        return np.random.Generator(np.random.Philox(seed_seq))


@dataclass(frozen=True)
class SyntheticRanking:
    """Score-sorted synthetic list of (score, label) items."""
    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.scores.shape != self.labels.shape:
            raise ValueError("scores and labels must have the same length")

    @property
    def n(self) -> int:
        return int(self.scores.shape[0])

    @property
    def items(self) -> List[Tuple[float, int]]:
        return list(zip(self.scores.tolist(), self.labels.tolist()))

    def to_text(self) -> str:
        """Debug dump, one ``score<TAB>label`` line per item."""
        return "".join(f"{s!r}\t{l}\n" for s, l in self.items)


class PairedAPSeries(BaseModel):
    """Aligned per-query AP values of two systems."""

    query_ids: List[str] = Field(default_factory=list)
    ap_a: List[float] = Field(default_factory=list)
    ap_b: List[float] = Field(default_factory=list)

    @field_validator('ap_a', 'ap_b')
    @classmethod
    def validate_ap_range(cls, v):
        if any(not 0.0 <= ap <= 1.0 for ap in v):
            raise ValueError("AP values must lie in [0, 1]")
        return v

    @model_validator(mode='after')
    def validate_lengths(self):
        if not len(self.query_ids) == len(self.ap_a) == len(self.ap_b):
            raise ValueError("query_ids, ap_a and ap_b must have equal length")
        return self

    @property
    def n(self) -> int:
        return len(self.query_ids)

    def differences(self) -> np.ndarray:
        """Per-query differences ap_b - ap_a."""
        return np.asarray(self.ap_b, dtype=float) - np.asarray(self.ap_a, dtype=float)
