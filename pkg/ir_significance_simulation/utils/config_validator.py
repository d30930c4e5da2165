"""Configuration validation utilities."""

from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import ValidationError

from ..models.config_models import ExperimentConfig, RunManifest, SystemConfig
from .logging import get_logger

logger = get_logger("config_validator")


def _format_errors(e: ValidationError, prefix: str = "") -> List[str]:
    errors = []
    for error in e.errors():
        field_path = " -> ".join(str(loc) for loc in error["loc"])
        errors.append(f"{prefix}{field_path}: {error['msg']}")
    return errors


class ConfigValidator:
    """Validates configuration and manifests and produces readable messages."""

    @staticmethod
    def validate_system_config(config_data: Dict[str, Any]) -> Tuple[bool, List[str], Optional[SystemConfig]]:
        """
        Validate complete system configuration.

        Returns:
            Tuple of (is_valid, error_messages, validated_config)
        """
        try:
            return True, [], SystemConfig(**config_data)
        except ValidationError as e:
            return False, _format_errors(e), None

    @staticmethod
    def validate_manifest(manifest_data: Dict[str, Any]) -> Tuple[bool, List[str], Optional[RunManifest]]:
        """
        Validate a run manifest, including the existence of every referenced path.

        Returns:
            Tuple of (is_valid, error_messages, validated_manifest)
        """
        try:
            manifest = RunManifest(**manifest_data)
        except ValidationError as e:
            return False, _format_errors(e, "manifest."), None

        errors = ConfigValidator.check_manifest_paths(manifest)
        return not errors, errors, manifest if not errors else None

    @staticmethod
    def check_manifest_paths(manifest: RunManifest) -> List[str]:
        """Return one message per referenced input path that does not exist."""
        errors = []
        for run_path in manifest.runs:
            if not Path(run_path).exists():
                errors.append(f"Run path not found: {run_path}")
        if manifest.qrels and not Path(manifest.qrels).is_file():
            errors.append(f"Qrels file not found: {manifest.qrels}")
        return errors

    @staticmethod
    def check_experiment_settings(cfg: ExperimentConfig, max_queries: Optional[int] = None) -> List[str]:
        """
        Check experiment settings for choices that weaken the estimates.

        Returns:
            List of warning messages
        """
        warnings = []

        if cfg.n_resamples < 1000:
            warnings.append(f"Only {cfg.n_resamples} resamples - resampling p-values are coarse")

        if cfg.n_repetitions < 100:
            warnings.append(f"Only {cfg.n_repetitions} repetitions - rejection rates have large Monte Carlo error")

        if max_queries is not None:
            too_large = [n for n in cfg.query_sizes if n > max_queries]
            if too_large:
                warnings.append(f"Query sizes {too_large} exceed the {max_queries} queries available")

        if cfg.threads > 64:
            warnings.append(f"{cfg.threads} worker threads requested - check available cores")

        return warnings
