"""Type-I error, power and validity experiments over fitted or synthetic mixtures.

Trials are grouped into tasks keyed by (system, h). Each task derives its
random streams from the master seed and its key alone, so results do not
depend on the number of workers or the order in which tasks finish.
"""

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, TypeVar

import numpy as np

from ..exceptions import ConfigurationError
from ..models.config_models import ExperimentConfig
from ..models.experiment_models import (
    AgreementEntry, DeltaAPRecord, MapPoint, PowerCurve, PowerPoint, Type1Entry, Type1Report
)
from ..models.mixture_models import LogNormalMixture
from ..models.significance_models import ALL_TESTS, ResampleConfig, SignificanceTest
from ..models.simulation_models import RngStream
from ..utils.logging import get_logger
from ..utils.metrics import metrics
from .sdmodel import Mu1ScalingWarning, scale_mu1
from .simulate import average_precision, paired_series, sample_ranking, subsample_queries
from .stattests import run_all_tests

logger = get_logger("experiments")

SystemModels = Mapping[str, Mapping[str, LogNormalMixture]]

TEST_PAIRS: List[Tuple[SignificanceTest, SignificanceTest]] = list(itertools.combinations(ALL_TESTS, 2))

T = TypeVar("T")
R = TypeVar("R")


def h_key(h: float) -> int:
    """Stream key of an effect size, stable across float spellings of the same grid point."""
    return int(round(h * 1_000_000))


@dataclass
class TrialCounts:
    """Tallies of one (system, h) task.

    Arrays are indexed by [alpha, query size, test] and [query size, test];
    ``decisions`` holds, per query size, each test's rejection decision
    trial by trial.
    """
    rejections: np.ndarray
    errors: np.ndarray
    decisions: List[Dict[SignificanceTest, List[bool]]]
    n_trials: np.ndarray


@dataclass
class _Task:
    system: str
    h: float
    base: Mapping[str, LogNormalMixture]
    scaled: Mapping[str, LogNormalMixture]


def resolve_seed(cfg: ExperimentConfig) -> int:
    """The configured master seed, or a fresh one that is logged for provenance."""
    if cfg.master_seed is not None:
        return cfg.master_seed
    seed = int(np.random.SeedSequence().entropy % (2 ** 63))
    logger.warning(f"No master seed configured; using {seed}")
    return seed


def _map_tasks(fn: Callable[[T], R], tasks: Sequence[T], threads: int) -> List[R]:
    """Map in task order, on a thread pool when more than one worker is requested."""
    if threads <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(fn, tasks))


def _check_models(models: SystemModels) -> None:
    if not models:
        raise ConfigurationError("No models to simulate")
    for system, queries in models.items():
        if not queries:
            raise ConfigurationError(f"System {system} has no fitted queries")


def _scale_all(models: Mapping[str, LogNormalMixture], h: float) -> Dict[str, LogNormalMixture]:
    # Callers log the non-positive mu1 diagnostic once per (system, query)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", Mu1ScalingWarning)
        return {query_id: scale_mu1(m, h) for query_id, m in models.items()}


def report_nonpositive_mu1(models: SystemModels) -> List[Tuple[str, str]]:
    """Log every (system, query) whose mu1 <= 0 once; return them."""
    affected = []
    for system, queries in models.items():
        for query_id, m in queries.items():
            if m.l1.mu <= 0:
                affected.append((system, query_id))
                logger.warning(
                    f"System {system} query {query_id}: mu1={m.l1.mu!r} <= 0, "
                    f"scaling by (1 + h) lowers the relevant scores"
                )
    return affected


def _run_task(task: _Task, cfg: ExperimentConfig, alphas: Sequence[float], root: RngStream) -> TrialCounts:
    """All repetitions of one (system, h) comparison."""
    query_ids = list(task.base.keys())
    index_of = {query_id: i for i, query_id in enumerate(query_ids)}
    n_sizes = len(cfg.query_sizes)
    n_tests = len(ALL_TESTS)

    rejections = np.zeros((len(alphas), n_sizes, n_tests), dtype=np.int64)
    errors = np.zeros((n_sizes, n_tests), dtype=np.int64)
    decisions: List[Dict[SignificanceTest, List[bool]]] = [{t: [] for t in ALL_TESTS} for _ in cfg.query_sizes]
    n_trials = np.zeros(n_sizes, dtype=np.int64)

    usable = [size <= len(query_ids) for size in cfg.query_sizes]
    for size, ok in zip(cfg.query_sizes, usable):
        if not ok:
            logger.warning(f"System {task.system} has {len(query_ids)} queries; skipping query size {size}")

    decision_alpha = cfg.power_alpha
    task_stream = root.child(task.system, h_key(task.h))

    for rep in range(cfg.n_repetitions):
        rep_stream = task_stream.child(rep)
        series = paired_series(task.base, task.scaled, query_ids, cfg.n_samples_per_list, rep_stream.child("lists"))
        diffs = series.differences()

        for si, size in enumerate(cfg.query_sizes):
            if not usable[si]:
                continue
            subset = subsample_queries(query_ids, size, rep_stream.child("subset", size))
            d = diffs[[index_of[q] for q in subset]]

            resample_cfg = ResampleConfig(
                n_resamples=cfg.n_resamples,
                rng=rep_stream.child("tests", size),
                statistic=cfg.statistic,
                exact_threshold=cfg.exact_threshold,
            )
            outcomes = run_all_tests(d, decision_alpha, resample_cfg)

            n_trials[si] += 1
            p_values = np.array([o.p_value for o in outcomes])
            failed = np.array([o.error is not None for o in outcomes])
            errors[si] += failed
            for ai, alpha in enumerate(alphas):
                rejections[ai, si] += (p_values <= alpha) & ~failed

            for o in outcomes:
                decisions[si][o.test_name].append(bool(o.reject))

    metrics.increment_counter("trials", int(n_trials.sum()))
    metrics.increment_counter("trial_test_errors", int(errors.sum()))
    return TrialCounts(rejections=rejections, errors=errors, decisions=decisions, n_trials=n_trials)


def _agreement_entries(counts: Iterable[TrialCounts], cfg: ExperimentConfig, h: float) -> List[AgreementEntry]:
    counts = list(counts)
    entries = []
    for si, size in enumerate(cfg.query_sizes):
        pooled = {t: [d for c in counts for d in c.decisions[si][t]] for t in ALL_TESTS}
        entries.extend(agreement_matrix(pooled, n_queries=size, h=h))
    return entries


def agreement_matrix(
    decisions: Mapping[SignificanceTest, Sequence[bool]],
    n_queries: int,
    h: float = 0.0,
) -> List[AgreementEntry]:
    """Pairwise agreement of per-trial rejection decisions of the five tests."""
    entries = []
    for a, b in TEST_PAIRS:
        da, db = np.asarray(decisions[a], dtype=bool), np.asarray(decisions[b], dtype=bool)
        if da.shape != db.shape:
            raise ValueError("Decision vectors must have equal length")
        trials = int(da.shape[0])
        agreement = float(np.count_nonzero(da == db)) / trials if trials else 0.0
        entries.append(AgreementEntry(test_a=a, test_b=b, h=h, n_queries=n_queries,
                                      agreement=agreement, n_trials=trials))
    return entries


def type1_experiment(models: SystemModels, cfg: ExperimentConfig) -> Type1Report:
    """Rejection rates when both lists of every query come from the same mixture.

    Rates are tallied per system over repetitions and then averaged over
    systems; with equal repetitions per system this equals total rejections
    over total trials.
    """
    _check_models(models)
    root = RngStream(resolve_seed(cfg))
    systems = list(models.keys())
    tasks = [_Task(system=s, h=0.0, base=models[s], scaled=models[s]) for s in systems]

    logger.info(f"Type-I experiment: {len(systems)} systems x {cfg.n_repetitions} repetitions")
    with metrics.timer("type1_experiment"):
        counts = _map_tasks(lambda t: _run_task(t, cfg, cfg.alpha_grid, root), tasks, cfg.threads)

    per_system: Dict[str, List[Type1Entry]] = {}
    for system, c in zip(systems, counts):
        per_system[system] = _type1_entries([c], cfg)

    return Type1Report(
        entries=_type1_entries(counts, cfg),
        per_system=per_system,
        agreement=_agreement_entries(counts, cfg, 0.0),
    )


def _type1_entries(counts: List[TrialCounts], cfg: ExperimentConfig) -> List[Type1Entry]:
    rejections = sum(c.rejections for c in counts)
    errors = sum(c.errors for c in counts)
    n_trials = sum(c.n_trials for c in counts)

    entries = []
    for ti, test in enumerate(ALL_TESTS):
        for ai, alpha in enumerate(cfg.alpha_grid):
            for si, size in enumerate(cfg.query_sizes):
                trials = int(n_trials[si])
                hits = int(rejections[ai, si, ti])
                rate = hits / trials if trials else 0.0
                entries.append(Type1Entry(
                    test=test, alpha=alpha, n_queries=size,
                    rejections=hits, n_trials=trials, rejection_rate=rate,
                    monte_carlo_stderr=math.sqrt(rate * (1.0 - rate) / trials) if trials else 0.0,
                    errors=int(errors[si, ti]),
                ))
    return entries


def power_experiment(models: SystemModels, cfg: ExperimentConfig) -> PowerCurve:
    """Rejection rates of each test when list B comes from the mu1-scaled mixture.

    The h = 0 row is built exactly like the type-I experiment and uses the
    same streams, so it reproduces the type-I rates at ``power_alpha``.
    """
    _check_models(models)
    root = RngStream(resolve_seed(cfg))
    systems = list(models.keys())
    if any(h > 0 for h in cfg.h_grid):
        report_nonpositive_mu1(models)

    tasks = [
        _Task(system=s, h=h, base=models[s], scaled=_scale_all(models[s], h))
        for h in cfg.h_grid
        for s in systems
    ]

    logger.info(f"Power experiment: {len(cfg.h_grid)} effect sizes x {len(systems)} systems "
                f"x {cfg.n_repetitions} repetitions")
    with metrics.timer("power_experiment"):
        counts = _map_tasks(lambda t: _run_task(t, cfg, [cfg.power_alpha], root), tasks, cfg.threads)

    points: List[PowerPoint] = []
    agreement: List[AgreementEntry] = []
    for hi, h in enumerate(cfg.h_grid):
        h_counts = counts[hi * len(systems):(hi + 1) * len(systems)]
        rejections = sum(c.rejections for c in h_counts)
        errors = sum(c.errors for c in h_counts)
        n_trials = sum(c.n_trials for c in h_counts)
        for ti, test in enumerate(ALL_TESTS):
            for si, size in enumerate(cfg.query_sizes):
                trials = int(n_trials[si])
                hits = int(rejections[0, si, ti])
                points.append(PowerPoint(
                    test=test, h=h, n_queries=size, rejections=hits, n_trials=trials,
                    p_reject=hits / trials if trials else 0.0, errors=int(errors[si, ti]),
                ))
        agreement.extend(_agreement_entries(h_counts, cfg, h))

    return PowerCurve(alpha=cfg.power_alpha, points=points, agreement=agreement)


def validity_map_curve(
    models: SystemModels,
    cfg: ExperimentConfig,
    h_grid: Optional[Sequence[float]] = None,
) -> List[MapPoint]:
    """Mean AP over systems, queries and ``cfg.map_simulations`` samples, per h.

    Every h reuses the streams of each (system, query, simulation), so the
    points differ only through the scaling of mu1.
    """
    _check_models(models)
    root = RngStream(resolve_seed(cfg)).child("validity")
    grid = list(h_grid) if h_grid is not None else list(cfg.h_grid)

    def mean_ap(h: float) -> float:
        total = []
        for system, queries in models.items():
            scaled = _scale_all(queries, h)
            for query_id, m in scaled.items():
                stream = root.child(system, query_id)
                for sim in range(cfg.map_simulations):
                    ranking = sample_ranking(m, cfg.n_samples_per_list, stream.child(sim))
                    total.append(average_precision(ranking))
        return math.fsum(total) / len(total)

    with metrics.timer("validity_map_curve"):
        means = _map_tasks(mean_ap, grid, cfg.threads)
    return [MapPoint(h=h, mean_ap=min(1.0, max(0.0, value))) for h, value in zip(grid, means)]


def delta_ap_distribution(
    models: SystemModels,
    h: float,
    n_reps: int,
    n_samples: int = 1000,
    master_seed: int = 0,
) -> List[DeltaAPRecord]:
    """Per (system, query, rep) relative AP change of the scaled model over the base model.

    Records whose base AP is 0 carry ``base_zero`` and no percentage.
    """
    if h < 0:
        raise ValueError("h must be non-negative")
    if n_reps < 1:
        raise ValueError("n_reps must be at least 1")
    _check_models(models)

    root = RngStream(master_seed).child("delta_ap", h_key(h))
    records = []
    for system, queries in models.items():
        scaled = _scale_all(queries, h)
        for query_id, m in queries.items():
            stream = root.child(system, query_id)
            for rep in range(n_reps):
                rep_stream = stream.child(rep)
                base_ap = average_precision(sample_ranking(m, n_samples, rep_stream.child(0)))
                scaled_ap = average_precision(sample_ranking(scaled[query_id], n_samples, rep_stream.child(1)))
                if base_ap == 0.0:
                    records.append(DeltaAPRecord(system=system, query=query_id, rep=rep, base_zero=True))
                else:
                    records.append(DeltaAPRecord(
                        system=system, query=query_id, rep=rep,
                        delta_ap_pct=100.0 * (scaled_ap - base_ap) / base_ap,
                    ))
    return records
