"""Parsing, filtering and normalisation of TREC runs and relevance judgments."""

import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

from ..exceptions import EmptyRun, MalformedLine, NoRelevantRetrieved
from ..models.run_models import Judgments, QueryScoreSet, RunEntry, RunFile
from ..utils.logging import get_logger
from ..utils.metrics import metrics

logger = get_logger("trec_ingest")

RUN_COLUMNS = 6
QRELS_COLUMNS = 4

Exclusion = Tuple[str, str]


def parse_run(text: str, source: Optional[str] = None) -> RunFile:
    """Parse a 6-column TREC run: query_id Q0 doc_id rank score tag.

    Entries are grouped by query in file order. A document listed twice for
    the same query keeps its first occurrence.
    """
    run: Optional[RunFile] = None
    seen: Dict[str, set] = {}
    duplicates = 0

    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue

        parts = line.split()
        if len(parts) != RUN_COLUMNS:
            raise MalformedLine(line_number, f"expected {RUN_COLUMNS} columns, found {len(parts)}", source)

        query_id, _, doc_id, rank_text, score_text, tag = parts
        try:
            rank = int(rank_text)
        except ValueError:
            raise MalformedLine(line_number, f"non-integer rank {rank_text!r}", source) from None
        try:
            score = float(score_text)
        except ValueError:
            raise MalformedLine(line_number, f"non-numeric score {score_text!r}", source) from None
        if not math.isfinite(score):
            raise MalformedLine(line_number, f"non-finite score {score_text!r}", source)
        if rank < 1:
            raise MalformedLine(line_number, f"rank must be a positive integer, got {rank}", source)

        if run is None:
            run = RunFile(system_tag=tag)
        elif tag != run.system_tag:
            logger.debug(f"Line {line_number}: run tag {tag!r} differs from {run.system_tag!r}")

        query_docs = seen.setdefault(query_id, set())
        if doc_id in query_docs:
            duplicates += 1
            continue
        query_docs.add(doc_id)
        run.queries.setdefault(query_id, []).append(RunEntry(query_id, doc_id, rank, score))

    if run is None:
        raise EmptyRun(f"Run {source or '<text>'} contains no entries")

    if duplicates:
        logger.warning(f"Run {run.system_tag}: dropped {duplicates} duplicate document entries")

    metrics.increment_counter("runs_parsed")
    return run


def serialize_run(run: RunFile) -> str:
    """Write a run back in the 6-column format, one line per entry."""
    lines = []
    for query_id, entries in run.queries.items():
        for entry in entries:
            lines.append(f"{query_id} Q0 {entry.doc_id} {entry.rank} {entry.score!r} {run.system_tag}\n")
    return "".join(lines)


def normalize_run(run: RunFile, top_k: int = 1000) -> RunFile:
    """Sort every query by score descending, keep the top ``top_k`` and renumber ranks.

    Equal scores keep the submitted rank order.
    """
    normalized = RunFile(system_tag=run.system_tag)
    for query_id, entries in run.queries.items():
        ordered = sorted(entries, key=lambda e: (-e.score, e.rank))[:top_k]
        normalized.queries[query_id] = [
            RunEntry(query_id, e.doc_id, position, e.score)
            for position, e in enumerate(ordered, start=1)
        ]
    return normalized


def parse_qrels(text: str, source: Optional[str] = None) -> Judgments:
    """Parse 4-column qrels: query_id iteration doc_id relevance.

    Graded relevance above 0 collapses to 1.
    """
    judgments = Judgments()
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue

        parts = line.split()
        if len(parts) != QRELS_COLUMNS:
            raise MalformedLine(line_number, f"expected {QRELS_COLUMNS} columns, found {len(parts)}", source)

        query_id, _, doc_id, relevance_text = parts
        try:
            relevance = int(relevance_text)
        except ValueError:
            raise MalformedLine(line_number, f"non-integer relevance {relevance_text!r}", source) from None

        judgments.set(query_id, doc_id, relevance)

    logger.debug(f"Loaded {len(judgments)} judgments for {len(judgments.query_ids)} queries")
    return judgments


def load_run(path: Union[str, Path]) -> RunFile:
    path = Path(path)
    return parse_run(path.read_text(encoding="utf-8"), source=str(path))


def load_qrels(path: Union[str, Path]) -> Judgments:
    path = Path(path)
    return parse_qrels(path.read_text(encoding="utf-8"), source=str(path))


def screen_run(
    run: RunFile,
    judgments: Judgments,
    min_docs_per_query: int = 10,
    min_relevant_per_query: int = 5,
) -> Optional[str]:
    """Return why a run is unusable for fitting, or None when it is usable."""
    if run.n_entries() == 0:
        return "empty run"

    scores = set(run.scores())
    if len(scores) < 2:
        return "no retrieval scores (constant score for every document)"

    for query_id, entries in run.queries.items():
        if len(entries) < min_docs_per_query:
            return f"query {query_id} retrieved {len(entries)} documents (< {min_docs_per_query})"

        relevant = sum(1 for e in entries if judgments.lookup(query_id, e.doc_id) == 1)
        if relevant < min_relevant_per_query:
            return f"query {query_id} retrieved {relevant} relevant documents (< {min_relevant_per_query})"

    return None


def filter_systems(
    runs: Iterable[RunFile],
    judgments: Judgments,
    min_docs_per_query: int = 10,
    min_relevant_per_query: int = 5,
    exclusions: Optional[List[Exclusion]] = None,
) -> List[RunFile]:
    """Keep the runs usable for fitting.

    Every dropped system is logged and, when ``exclusions`` is given,
    appended to it as ``(system_tag, reason)``.
    """
    kept = []
    for run in runs:
        reason = screen_run(run, judgments, min_docs_per_query, min_relevant_per_query)
        if reason is None:
            kept.append(run)
            continue

        logger.info(f"Excluding system {run.system_tag}: {reason}")
        metrics.increment_counter("systems_excluded")
        if exclusions is not None:
            exclusions.append((run.system_tag, reason))

    return kept


def format_exclusion_log(exclusions: Iterable[Exclusion]) -> str:
    """One ``system_tag<TAB>reason`` line per dropped system."""
    return "".join(f"{tag}\t{reason}\n" for tag, reason in exclusions)


def shift_scores(run: RunFile, epsilon: float = 1e-3) -> RunFile:
    """Make every score strictly positive with one constant per run.

    When any score is <= 0 each score s becomes s - min + epsilon; otherwise
    the run is returned unchanged.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")

    min_score = min(run.scores(), default=1.0)
    if min_score > 0:
        return run

    logger.debug(f"Shifting scores of {run.system_tag} by {-min_score + epsilon!r}")
    shifted = RunFile(system_tag=run.system_tag)
    for query_id, entries in run.queries.items():
        shifted.queries[query_id] = [
            e._replace(score=e.score - min_score + epsilon) for e in entries
        ]
    return shifted


def build_query_score_set(query_id: str, entries: List[RunEntry], judgments: Judgments) -> QueryScoreSet:
    """Partition one query's retrieved scores by judged relevance.

    Judged non-relevant and unjudged documents both count as non-relevant.
    """
    relevant, nonrelevant = [], []
    for entry in entries:
        if judgments.lookup(query_id, entry.doc_id) == 1:
            relevant.append(entry.score)
        else:
            nonrelevant.append(entry.score)

    if not relevant:
        raise NoRelevantRetrieved(query_id)

    return QueryScoreSet(
        query_id=query_id,
        relevant_scores=relevant,
        nonrelevant_scores=nonrelevant,
        n_retrieved=len(entries),
    )


def build_query_score_sets(run: RunFile, judgments: Judgments) -> List[QueryScoreSet]:
    """Score sets of every query of a shifted, truncated run."""
    return [
        build_query_score_set(query_id, entries, judgments)
        for query_id, entries in run.queries.items()
    ]
