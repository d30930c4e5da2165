"""Persistence of fitted mixtures and loading of synthetic model specifications."""

import csv
import io
from pathlib import Path
from typing import Any, Dict, Union

import yaml
from pydantic import ValidationError

from ..exceptions import ConfigurationError, MalformedLine
from ..models.mixture_models import LogNormalMixture
from ..utils.logging import get_logger

logger = get_logger("model_store")

MODEL_FIELDS = ["system", "query", "lambda", "mu1", "sigma1", "mu0", "sigma0"]

ModelSet = Dict[str, Dict[str, LogNormalMixture]]


def _format(value: Any) -> str:
    # repr gives the shortest string that reads back to the same float
    return repr(value) if isinstance(value, float) else str(value)


def serialize_models(models: ModelSet) -> str:
    """One ``system,query,lambda,mu1,sigma1,mu0,sigma0`` row per fitted mixture."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(MODEL_FIELDS)
    for system, queries in models.items():
        for query_id, m in queries.items():
            row = m.to_row()
            writer.writerow([system, query_id] + [_format(float(row[k])) for k in MODEL_FIELDS[2:]])
    return buffer.getvalue()


def parse_models(text: str, source: str = "<text>") -> ModelSet:
    """Read the model format back; rows keep file order."""
    models: ModelSet = {}
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return models
    missing = set(MODEL_FIELDS) - set(reader.fieldnames)
    if missing:
        raise ConfigurationError(f"{source}: model file lacks columns {sorted(missing)}")

    for line_number, row in enumerate(reader, start=2):
        try:
            mixture = LogNormalMixture.from_row(row)
        except (ValueError, TypeError, ValidationError) as e:
            raise MalformedLine(line_number, str(e), source) from None
        models.setdefault(row["system"], {})[row["query"]] = mixture

    return models


def write_models(path: Union[str, Path], models: ModelSet) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_models(models), encoding="utf-8")
    logger.info(f"Wrote {sum(len(q) for q in models.values())} models to {path}")
    return path


def read_models(path: Union[str, Path]) -> ModelSet:
    path = Path(path)
    return parse_models(path.read_text(encoding="utf-8"), source=str(path))


def parse_synthetic_spec(text: str) -> ModelSet:
    """Build hand-specified mixtures from a YAML block.

    Each system either repeats one mixture over ``queries`` generated query
    ids, or lists its mixtures per query::

        systems:
          - name: synthetic
            queries: 50
            mixture: {lambda: 0.05, mu1: 1.2, sigma1: 0.4, mu0: 0.8, sigma0: 0.4}
          - name: listed
            per_query:
              "301": {lambda: 0.1, mu1: 1.0, sigma1: 0.5, mu0: 0.5, sigma0: 0.5}
    """
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Synthetic spec is not valid YAML: {e}") from e

    systems = data.get("systems") if isinstance(data, dict) else None
    if not systems:
        raise ConfigurationError("Synthetic spec must list at least one system under 'systems'")

    models: ModelSet = {}
    for i, spec in enumerate(systems):
        name = str(spec.get("name", f"synthetic-{i + 1}"))
        try:
            if "per_query" in spec:
                queries = {
                    str(query_id): LogNormalMixture.from_row(params)
                    for query_id, params in spec["per_query"].items()
                }
            else:
                count = int(spec["queries"])
                mixture = LogNormalMixture.from_row(spec["mixture"])
                width = len(str(count))
                queries = {f"q{j:0{width}d}": mixture for j in range(1, count + 1)}
        except (KeyError, TypeError, ValueError, ValidationError) as e:
            raise ConfigurationError(f"Invalid synthetic system {name!r}: {e}") from e
        if not queries:
            raise ConfigurationError(f"Synthetic system {name!r} has no queries")
        models[name] = queries

    return models


def load_synthetic_spec(path: Union[str, Path]) -> ModelSet:
    return parse_synthetic_spec(Path(path).read_text(encoding="utf-8"))
