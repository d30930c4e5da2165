"""Synthetic rankings sampled from score-distribution models, and their AP."""

import math
from typing import List, Mapping, Sequence

import numpy as np

from ..exceptions import MissingModel, SubsetTooLarge
from ..models.mixture_models import LogNormalMixture
from ..models.simulation_models import PairedAPSeries, RngStream, SyntheticRanking
from ..utils.logging import get_logger

logger = get_logger("simulate")


def sample_ranking(m: LogNormalMixture, n_samples: int, rng: RngStream) -> SyntheticRanking:
    """Draw ``n_samples`` labelled scores from a mixture and sort them.

    Each draw picks the relevant component with probability lam. Scores are
    sorted descending; equal scores put non-relevant items first.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")

    gen = rng.generator()
    labels = (gen.random(n_samples) < m.lam).astype(np.int8)
    scores = np.empty(n_samples, dtype=float)

    relevant = labels == 1
    n_relevant = int(relevant.sum())
    scores[relevant] = gen.lognormal(mean=m.l1.mu, sigma=m.l1.sigma, size=n_relevant)
    scores[~relevant] = gen.lognormal(mean=m.l0.mu, sigma=m.l0.sigma, size=n_samples - n_relevant)

    # lexsort: last key is primary
    order = np.lexsort((labels, -scores))
    return SyntheticRanking(scores=scores[order], labels=labels[order])


def average_precision(r: SyntheticRanking) -> float:
    """Mean of precision@k over the ranks k of relevant items; 0 without relevant items.

    The recall base is the number of relevant items in the list itself.
    """
    labels = np.asarray(r.labels)
    n_relevant = int(labels.sum())
    if n_relevant == 0:
        return 0.0

    hits = np.cumsum(labels)
    ranks = np.arange(1, labels.shape[0] + 1)
    relevant = labels == 1
    precisions = hits[relevant] / ranks[relevant]
    return math.fsum(precisions.tolist()) / n_relevant


def paired_series(
    models_a: Mapping[str, LogNormalMixture],
    models_b: Mapping[str, LogNormalMixture],
    query_ids: Sequence[str],
    n_samples: int,
    rng: RngStream,
    share_streams: bool = False,
) -> PairedAPSeries:
    """Sample one ranking per query from each model family and pair their APs.

    The two lists of a query use independent sub-streams unless
    ``share_streams`` forces them to use the same one.
    """
    ap_a: List[float] = []
    ap_b: List[float] = []
    for query_id in query_ids:
        if query_id not in models_a:
            raise MissingModel(query_id)
        if query_id not in models_b:
            raise MissingModel(query_id)

        query_stream = rng.child(query_id)
        stream_a = query_stream.child(0)
        stream_b = stream_a if share_streams else query_stream.child(1)

        ap_a.append(average_precision(sample_ranking(models_a[query_id], n_samples, stream_a)))
        ap_b.append(average_precision(sample_ranking(models_b[query_id], n_samples, stream_b)))

    return PairedAPSeries(query_ids=list(query_ids), ap_a=ap_a, ap_b=ap_b)


def subsample_queries(query_ids: Sequence[str], n: int, rng: RngStream) -> List[str]:
    """Uniform subset of ``n`` queries without replacement, in original order."""
    if n > len(query_ids):
        raise SubsetTooLarge(f"Cannot draw {n} queries from a set of {len(query_ids)}")
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == len(query_ids):
        return list(query_ids)

    chosen = rng.generator().choice(len(query_ids), size=n, replace=False)
    return [query_ids[i] for i in sorted(chosen.tolist())]
