"""Core components: ingestion, fitting, simulation, tests and experiments."""

from .trec_ingest import (
    parse_run, serialize_run, normalize_run, parse_qrels, filter_systems,
    shift_scores, build_query_score_set, build_query_score_sets
)
from .sdmodel import fit_lognormal_mle, fit_mixture, scale_mu1
from .simulate import sample_ranking, average_precision, paired_series, subsample_queries
from .stattests import (
    t_test_paired, wilcoxon_signed_rank, sign_test, permutation_test,
    bootstrap_test, run_all_tests
)
from .experiments import (
    type1_experiment, power_experiment, validity_map_curve,
    delta_ap_distribution, agreement_matrix
)

__all__ = [
    # Ingestion
    "parse_run",
    "serialize_run",
    "normalize_run",
    "parse_qrels",
    "filter_systems",
    "shift_scores",
    "build_query_score_set",
    "build_query_score_sets",

    # Score distribution models
    "fit_lognormal_mle",
    "fit_mixture",
    "scale_mu1",

    # Simulation
    "sample_ranking",
    "average_precision",
    "paired_series",
    "subsample_queries",

    # Significance tests
    "t_test_paired",
    "wilcoxon_signed_rank",
    "sign_test",
    "permutation_test",
    "bootstrap_test",
    "run_all_tests",

    # Experiments
    "type1_experiment",
    "power_experiment",
    "validity_map_curve",
    "delta_ap_distribution",
    "agreement_matrix"
]
