"""Command-line entry point for the IR significance simulation framework."""

import argparse
import hashlib
import json
import statistics
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import yaml
from pydantic import ValidationError

from .core.experiments import (
    delta_ap_distribution, power_experiment, resolve_seed, type1_experiment, validity_map_curve
)
from .core.sdmodel import fit_mixture
from .core.simulate import sample_ranking
from .core.stattests import run_all_tests
from .core.trec_ingest import (
    build_query_score_set, filter_systems, format_exclusion_log, load_qrels, load_run,
    normalize_run, serialize_run, shift_scores
)
from .exceptions import AllTrialsFailed, ConfigurationError, EmptyRun, MalformedLine, SimulationError
from .models.config_models import ExperimentConfig, Profile, RunManifest, SystemConfig
from .models.experiment_models import PowerCurve, Type1Report
from .models.run_models import RunEntry, RunFile
from .models.significance_models import ALL_TESTS, ResampleConfig
from .models.simulation_models import PairedAPSeries, RngStream
from .storage.model_store import ModelSet, load_synthetic_spec, read_models, write_models
from .storage.report_store import (
    write_agreement, write_delta_ap, write_power, write_type1, write_validity_map
)
from .utils.config import ConfigManager, load_mapping
from .utils.config_validator import ConfigValidator
from .utils.logging import get_logger, setup_logging
from .utils.metrics import metrics

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NUMERICAL_FAILURE = 2

SUMMARY_ALPHA = 0.05


@dataclass
class FitSummary:
    """Collection statistics gathered while fitting."""
    submitted: int = 0
    used: int = 0
    queries: int = 0
    relevant_retrieved: int = 0
    mean_lambda: float = 0.0
    exclusions: List[Tuple[str, str]] = field(default_factory=list)
    failures: List[Tuple[str, str, str]] = field(default_factory=list)


@dataclass
class Inputs:
    """Models and settings resolved for one experiment command."""
    models: ModelSet
    collection: str
    output_dir: Path
    profile: Profile
    experiment: ExperimentConfig


def _parse_list(text: Optional[str], cast) -> Optional[List[Any]]:
    if text is None:
        return None
    try:
        return [cast(item) for item in text.replace(" ", "").split(",") if item]
    except ValueError as e:
        raise ConfigurationError(f"Invalid list {text!r}: {e}") from e


def config_hash(cfg: ExperimentConfig) -> str:
    """Short digest of every setting that influences the numbers in a report."""
    # Worker count does not change results
    payload = json.dumps(cfg.model_dump(mode="json", exclude={"threads"}), sort_keys=True)
    return hashlib.md5(payload.encode("utf-8")).hexdigest()[:12]


def collect_run_paths(paths: Sequence[str]) -> List[Path]:
    """Expand directories into their run files, sorted by name."""
    collected = []
    for entry in paths:
        path = Path(entry)
        if path.is_dir():
            collected.extend(sorted(p for p in path.iterdir() if p.is_file() and not p.name.startswith(".")))
        else:
            collected.append(path)
    return collected


def read_ap_file(path: Path) -> PairedAPSeries:
    """Read per-query APs as ``ap_a ap_b`` or ``query ap_a ap_b`` rows.

    Columns may be separated by whitespace or commas; blank lines and lines
    starting with ``#`` are skipped.
    """
    query_ids, ap_a, ap_b = [], [], []
    for line_number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.replace(",", " ").split()
        if len(fields) == 2:
            query_id = str(len(query_ids) + 1)
        elif len(fields) == 3:
            query_id = fields[0]
        else:
            raise MalformedLine(line_number, f"expected 2 or 3 columns, found {len(fields)}", str(path))
        try:
            a, b = float(fields[-2]), float(fields[-1])
        except ValueError:
            raise MalformedLine(line_number, "AP values must be numbers", str(path)) from None
        query_ids.append(query_id)
        ap_a.append(a)
        ap_b.append(b)

    if len(query_ids) < 2:
        raise ConfigurationError(f"{path}: at least 2 paired AP rows are required, found {len(query_ids)}")
    try:
        return PairedAPSeries(query_ids=query_ids, ap_a=ap_a, ap_b=ap_b)
    except ValidationError as e:
        raise ConfigurationError(f"{path}: {e.errors()[0]['msg']}") from None


class SimulationApp:
    """Wires configuration, ingestion, fitting and experiments for the CLI."""

    def __init__(self, config_path: Optional[str] = None, log_level: Optional[str] = None):
        self.config = ConfigManager(config_path)
        if log_level:
            self.config.set("system.log_level", log_level)

        config_data = dict(self.config.get("system", {}) or {})
        for section in ("ingest", "simplex", "validity", "profiles"):
            if self.config.has_section(section):
                config_data[section] = self.config.get(section)

        valid, errors, system_config = ConfigValidator.validate_system_config(config_data)
        setup_logging(
            level=system_config.log_level if valid else "INFO",
            log_file=system_config.log_file if valid else None,
        )
        self.logger = get_logger("main")
        if not valid:
            raise ConfigurationError("Invalid configuration:\n  " + "\n  ".join(errors))
        self.system_config: SystemConfig = system_config

    # Inputs

    def load_manifest(self, path: str) -> RunManifest:
        try:
            data = load_mapping(path)
        except FileNotFoundError:
            raise ConfigurationError(f"Manifest not found: {path}") from None
        except (yaml.YAMLError, json.JSONDecodeError, ValueError) as e:
            raise ConfigurationError(f"Unreadable manifest {path}: {e}") from e

        valid, errors, manifest = ConfigValidator.validate_manifest(data)
        if not valid:
            raise ConfigurationError("Invalid manifest:\n  " + "\n  ".join(errors))
        return manifest

    def experiment_config(self, profile: Profile, manifest: Optional[RunManifest], args: argparse.Namespace,
                          max_queries: Optional[int] = None) -> ExperimentConfig:
        """Profile defaults, then manifest overrides and seed, then command-line flags."""
        overrides: Dict[str, Any] = {}
        if manifest is not None:
            overrides.update(manifest.overrides)
            if manifest.master_seed is not None:
                overrides["master_seed"] = manifest.master_seed

        flags = {
            "master_seed": getattr(args, "seed", None),
            "query_sizes": _parse_list(getattr(args, "queries", None), int),
            "alpha_grid": _parse_list(getattr(args, "alpha_grid", None), float),
            "h_grid": _parse_list(getattr(args, "h_grid", None), float),
            "n_repetitions": getattr(args, "reps", None),
            "n_resamples": getattr(args, "resamples", None),
            "threads": getattr(args, "threads", None),
        }
        overrides.update({k: v for k, v in flags.items() if v is not None})

        try:
            cfg = self.system_config.experiment_config(profile, overrides)
        except ValidationError as e:
            raise ConfigurationError("Invalid experiment settings:\n  " + "\n  ".join(
                f"{' -> '.join(str(loc) for loc in err['loc'])}: {err['msg']}" for err in e.errors()
            )) from None

        for warning in ConfigValidator.check_experiment_settings(cfg, max_queries):
            self.logger.warning(warning)
        return cfg

    def resolve_inputs(self, args: argparse.Namespace) -> Inputs:
        manifest = self.load_manifest(args.manifest) if args.manifest else None
        profile = Profile(args.profile) if args.profile else (manifest.profile if manifest else Profile.DESK)

        if args.models:
            models = read_models(args.models)
        elif args.synthetic:
            models = load_synthetic_spec(args.synthetic)
        elif manifest is not None and manifest.runs:
            models, _ = self.fit_collection(manifest)
        else:
            raise ConfigurationError("No models: give --models, --synthetic or a manifest listing runs")

        if not models or not any(models.values()):
            raise ConfigurationError("The model set is empty")

        collection = args.collection or (manifest.collection if manifest else None) or "synthetic"
        output_dir = Path(args.out or (manifest.output_dir if manifest else "results"))
        experiment = self.experiment_config(profile, manifest, args, max(len(q) for q in models.values()))

        if experiment.master_seed is None:
            seed = resolve_seed(experiment)
            print(f"Using master seed {seed}")
            experiment = experiment.model_copy(update={"master_seed": seed})

        return Inputs(models=models, collection=collection, output_dir=output_dir,
                      profile=profile, experiment=experiment)

    def provenance(self, inputs: Inputs) -> Dict[str, Any]:
        return {
            "profile": inputs.profile.value,
            "seed": inputs.experiment.master_seed,
            "config_hash": config_hash(inputs.experiment),
        }

    # Commands

    def fit_collection(self, manifest: RunManifest) -> Tuple[ModelSet, FitSummary]:
        """Parse, filter, shift, truncate and fit every (system, query) of a manifest."""
        ingest = self.system_config.ingest
        summary = FitSummary()

        judgments = load_qrels(manifest.qrels)
        runs = []
        for path in collect_run_paths(manifest.runs):
            try:
                runs.append(load_run(path))
            except EmptyRun:
                runs.append(RunFile(system_tag=path.name))
        summary.submitted = len(runs)

        kept = filter_systems(runs, judgments, ingest.min_docs_per_query,
                              ingest.min_relevant_per_query, summary.exclusions)
        summary.used = len(kept)

        models: ModelSet = {}
        query_ids = set()
        lambdas = []
        for run in kept:
            prepared = normalize_run(shift_scores(run, ingest.shift_epsilon), ingest.top_k)
            for query_id, entries in prepared.queries.items():
                try:
                    qss = build_query_score_set(query_id, entries, judgments)
                    mixture = fit_mixture(qss, self.system_config.simplex)
                except SimulationError as e:
                    self.logger.warning(f"Fit failed for system {run.system_tag} query {query_id}: {e}")
                    summary.failures.append((run.system_tag, query_id, str(e)))
                    metrics.increment_counter("fit_failures")
                    continue
                models.setdefault(run.system_tag, {})[query_id] = mixture
                query_ids.add(query_id)
                lambdas.append(mixture.lam)
                summary.relevant_retrieved += len(qss.relevant_scores)

        summary.queries = len(query_ids)
        summary.mean_lambda = statistics.fmean(lambdas) if lambdas else 0.0
        self.logger.info(
            f"Fitted {len(lambdas)} models: {summary.used}/{summary.submitted} systems used, "
            f"{summary.queries} queries, {len(summary.failures)} fit failures"
        )
        return models, summary

    def cmd_fit(self, args: argparse.Namespace) -> int:
        if not args.manifest:
            raise ConfigurationError("fit requires --manifest")
        manifest = self.load_manifest(args.manifest)
        if not manifest.runs:
            raise ConfigurationError("The manifest lists no runs")

        models, summary = self.fit_collection(manifest)
        output_dir = Path(args.out or manifest.output_dir)
        write_models(output_dir / "models.csv", models)
        exclusion_path = output_dir / "excluded.tsv"
        exclusion_path.write_text(format_exclusion_log(summary.exclusions), encoding="utf-8")

        print(f"Collection:            {manifest.collection}")
        print(f"Systems submitted:     {summary.submitted}")
        print(f"Systems used:          {summary.used}")
        print(f"Systems dropped:       {len(summary.exclusions)}")
        print(f"Queries:               {summary.queries}")
        print(f"Relevant retrieved:    {summary.relevant_retrieved}")
        print(f"Mean lambda:           {summary.mean_lambda:.4f}")
        print(f"Fit failures:          {len(summary.failures)}")
        return EXIT_OK

    def cmd_type1(self, args: argparse.Namespace) -> int:
        inputs = self.resolve_inputs(args)
        report = type1_experiment(inputs.models, inputs.experiment)
        self._check_trials([(e.n_trials, e.errors) for e in report.entries])

        provenance = self.provenance(inputs)
        write_type1(inputs.output_dir / "type1.csv", inputs.collection, report, provenance)
        write_agreement(inputs.output_dir / "agreement.csv", inputs.collection, report.agreement, provenance)
        self._print_type1(report, inputs.experiment)
        return EXIT_OK

    def cmd_power(self, args: argparse.Namespace) -> int:
        inputs = self.resolve_inputs(args)
        curve = power_experiment(inputs.models, inputs.experiment)
        self._check_trials([(p.n_trials, p.errors) for p in curve.points])

        provenance = self.provenance(inputs)
        write_power(inputs.output_dir / "power.csv", inputs.collection, curve, provenance)
        write_agreement(inputs.output_dir / "power_agreement.csv", inputs.collection, curve.agreement, provenance)
        self._print_power(curve, inputs.experiment)
        return EXIT_OK

    def cmd_validity(self, args: argparse.Namespace) -> int:
        validity = self.system_config.validity
        if args.reps is not None:
            validity = validity.model_copy(update={"n_reps": args.reps})
        h_grid = _parse_list(args.h_grid, float) or validity.h_grid
        # --reps and --h-grid belong to the validity study here, not to the profile
        args.reps = None
        args.h_grid = None

        inputs = self.resolve_inputs(args)
        points = validity_map_curve(inputs.models, inputs.experiment, h_grid)
        records = delta_ap_distribution(
            inputs.models, validity.h, validity.n_reps,
            n_samples=inputs.experiment.n_samples_per_list,
            master_seed=inputs.experiment.master_seed,
        )

        provenance = self.provenance(inputs)
        write_validity_map(inputs.output_dir / "validity_map.csv", points, provenance)
        write_delta_ap(inputs.output_dir / "delta_ap.csv", records, {**provenance, "h": validity.h})

        print(f"{'h':>6}  {'MAP':>8}")
        for point in points:
            print(f"{point.h:>6.3f}  {point.mean_ap:>8.4f}")
        deltas = [r.delta_ap_pct for r in records if not r.base_zero]
        if deltas:
            positive = sum(1 for d in deltas if d > 0) / len(deltas)
            print(f"Delta AP% at h={validity.h}: median {statistics.median(deltas):.2f}, "
                  f"{positive:.1%} positive, {len(records) - len(deltas)} with zero base AP")
        return EXIT_OK

    def cmd_test(self, args: argparse.Namespace) -> int:
        series = read_ap_file(Path(args.ap_file))
        cfg = self.experiment_config(Profile(args.profile or Profile.DESK.value), None, args)
        seed = resolve_seed(cfg)
        if cfg.master_seed is None:
            print(f"Using master seed {seed}")

        resample_cfg = ResampleConfig(
            n_resamples=cfg.n_resamples,
            rng=RngStream(seed),
            statistic=cfg.statistic,
            exact_threshold=cfg.exact_threshold,
        )
        outcomes = run_all_tests(series.differences(), args.alpha, resample_cfg)

        print(f"{'test':<12} {'statistic':>12} {'p':>10}  reject")
        for o in outcomes:
            decision = "error" if o.error else ("yes" if o.reject else "no")
            print(f"{o.test_name.value:<12} {o.statistic:>12.6g} {o.p_value:>10.6g}  {decision}")
        return EXIT_OK

    def cmd_simulate_run(self, args: argparse.Namespace) -> int:
        if not args.models:
            raise ConfigurationError("simulate-run requires --models")
        models = read_models(args.models)
        if not models:
            raise ConfigurationError("The model set is empty")
        system = args.system or next(iter(models))
        if system not in models:
            raise ConfigurationError(f"System {system!r} not in {args.models}")

        cfg = self.experiment_config(Profile(args.profile or Profile.DESK.value), None, args)
        seed = resolve_seed(cfg)
        if cfg.master_seed is None:
            print(f"Using master seed {seed}")

        output_dir = Path(args.out or "results")
        output_dir.mkdir(parents=True, exist_ok=True)
        root = RngStream(seed).child("simulate_run", system)

        run = RunFile(system_tag="synthetic")
        qrels_lines = []
        for query_id, mixture in models[system].items():
            ranking = sample_ranking(mixture, cfg.n_samples_per_list, root.child(query_id))
            entries = []
            for position, (score, label) in enumerate(ranking.items, start=1):
                doc_id = f"{query_id}-d{position:05d}"
                entries.append(RunEntry(query_id, doc_id, position, score))
                qrels_lines.append(f"{query_id} 0 {doc_id} {label}\n")
            run.queries[query_id] = entries

            if args.dump_rankings:
                dump_dir = output_dir / "rankings"
                dump_dir.mkdir(exist_ok=True)
                (dump_dir / f"{query_id}.tsv").write_text(ranking.to_text(), encoding="utf-8")

        (output_dir / "synthetic.run").write_text(serialize_run(run), encoding="utf-8")
        (output_dir / "synthetic.qrels").write_text("".join(qrels_lines), encoding="utf-8")
        print(f"Wrote {run.n_entries()} entries for {len(run.queries)} queries of {system} to {output_dir}")
        return EXIT_OK

    # Reporting

    def _check_trials(self, tallies: List[Tuple[int, int]]) -> None:
        trials = sum(n for n, _ in tallies)
        errors = sum(e for _, e in tallies)
        if trials == 0:
            raise ConfigurationError("No query size fits the available queries; nothing was simulated")
        if errors == trials:
            raise AllTrialsFailed("Every test failed in every trial")

    def _print_type1(self, report: Type1Report, cfg: ExperimentConfig) -> None:
        alpha = next((a for a in cfg.alpha_grid if abs(a - SUMMARY_ALPHA) < 1e-12), cfg.alpha_grid[0])
        print(f"Type-I error at alpha={alpha}")
        print(f"{'test':<12}" + "".join(f"{f'n={n}':>9}" for n in cfg.query_sizes))
        for test in ALL_TESTS:
            rates = [report.rate(test, alpha, n) for n in cfg.query_sizes]
            print(f"{test.value:<12}" + "".join(f"{r:>9.4f}" if r is not None else f"{'-':>9}" for r in rates))

    def _print_power(self, curve: PowerCurve, cfg: ExperimentConfig) -> None:
        n = cfg.query_sizes[-1]
        print(f"Power at alpha={curve.alpha}, n={n}")
        print(f"{'test':<12}" + "".join(f"{f'h={h:g}':>9}" for h in cfg.h_grid))
        for test in ALL_TESTS:
            values = [curve.p_reject(test, h, n) for h in cfg.h_grid]
            print(f"{test.value:<12}" + "".join(f"{v:>9.4f}" if v is not None else f"{'-':>9}" for v in values))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ir-significance-simulation",
        description="Simulate type-I error and power of IR significance tests",
    )
    parser.add_argument("--config", type=str, help="Path to configuration file")
    parser.add_argument(
        "--log-level",
        type=str,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Override log level"
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", type=str, help="Run manifest (YAML)")
    common.add_argument("--models", type=str, help="Fitted model file")
    common.add_argument("--synthetic", type=str, help="Synthetic model specification (YAML)")
    common.add_argument("--collection", type=str, help="Collection name written to reports")
    common.add_argument("--profile", choices=[p.value for p in Profile], help="Experiment profile")
    common.add_argument("--seed", type=int, help="Master seed")
    common.add_argument("--out", type=str, help="Output directory")
    common.add_argument("--queries", type=str, help="Comma-separated query-set sizes")
    common.add_argument("--alpha-grid", type=str, help="Comma-separated significance levels")
    common.add_argument("--h-grid", type=str, help="Comma-separated effect sizes")
    common.add_argument("--reps", type=int, help="Repetitions per system")
    common.add_argument("--resamples", type=int, help="Permutation and bootstrap resamples")
    common.add_argument("--threads", type=int, help="Worker threads")

    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("fit", parents=[common], help="Fit score distribution models to TREC runs")
    subparsers.add_parser("type1", parents=[common], help="Estimate type-I error rates")
    subparsers.add_parser("power", parents=[common], help="Estimate power curves")
    subparsers.add_parser("validity", parents=[common], help="MAP curve and delta-AP distribution")

    test = subparsers.add_parser("test", parents=[common], help="Run the five tests on a paired AP file")
    test.add_argument("ap_file", type=str, help="File of paired per-query APs")
    test.add_argument("--alpha", type=float, default=0.05, help="Significance level (default: 0.05)")

    simulate = subparsers.add_parser("simulate-run", parents=[common], help="Write a synthetic run and qrels")
    simulate.add_argument("--system", type=str, help="System of the model file to sample (default: first)")
    simulate.add_argument("--dump-rankings", action="store_true", help="Also write score<TAB>label rankings")

    return parser


COMMANDS = {
    "fit": SimulationApp.cmd_fit,
    "type1": SimulationApp.cmd_type1,
    "power": SimulationApp.cmd_power,
    "validity": SimulationApp.cmd_validity,
    "test": SimulationApp.cmd_test,
    "simulate-run": SimulationApp.cmd_simulate_run,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    logger = get_logger("main")

    try:
        app = SimulationApp(config_path=args.config, log_level=args.log_level)
        code = COMMANDS[args.command](app, args)
        logger.debug(f"Metrics: {metrics.get_all_metrics()}")
        return code
    except AllTrialsFailed as e:
        logger.error(str(e))
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL_FAILURE
    except (SimulationError, ValidationError, OSError, ValueError) as e:
        logger.error(str(e))
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
