"""CSV reports of the experiments, with provenance header comments."""

import csv
import io
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from ..models.experiment_models import AgreementEntry, DeltaAPRecord, MapPoint, PowerCurve, Type1Report
from ..utils.logging import get_logger

logger = get_logger("report_store")

TYPE1_HEADER = ["collection", "test", "alpha", "n_queries", "rejection_rate", "n_trials", "stderr"]
POWER_HEADER = ["collection", "test", "h", "n_queries", "p_reject", "n_trials"]
VALIDITY_MAP_HEADER = ["h", "mean_ap"]
DELTA_AP_HEADER = ["system", "query", "rep", "delta_ap_pct", "base_zero_flag"]
AGREEMENT_HEADER = ["collection", "test_a", "test_b", "h", "n_queries", "agreement", "n_trials"]


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def render_csv(
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    provenance: Optional[Dict[str, Any]] = None,
) -> str:
    """CSV text with ``# key=value`` comment lines ahead of the header."""
    buffer = io.StringIO()
    for key, value in (provenance or {}).items():
        buffer.write(f"# {key}={value}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def _write(path: Union[str, Path], text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def type1_rows(collection: str, report: Type1Report) -> List[List[Any]]:
    return [
        [collection, e.test, e.alpha, e.n_queries, e.rejection_rate, e.n_trials, e.monte_carlo_stderr]
        for e in report.entries
    ]


def power_rows(collection: str, curve: PowerCurve) -> List[List[Any]]:
    return [
        [collection, p.test, p.h, p.n_queries, p.p_reject, p.n_trials]
        for p in curve.points
    ]


def agreement_rows(collection: str, entries: Iterable[AgreementEntry]) -> List[List[Any]]:
    return [
        [collection, e.test_a, e.test_b, e.h, e.n_queries, e.agreement, e.n_trials]
        for e in entries
    ]


def write_type1(path, collection: str, report: Type1Report, provenance: Optional[Dict[str, Any]] = None) -> Path:
    return _write(path, render_csv(TYPE1_HEADER, type1_rows(collection, report), provenance))


def write_power(path, collection: str, curve: PowerCurve, provenance: Optional[Dict[str, Any]] = None) -> Path:
    return _write(path, render_csv(POWER_HEADER, power_rows(collection, curve), provenance))


def write_agreement(path, collection: str, entries: Iterable[AgreementEntry],
                    provenance: Optional[Dict[str, Any]] = None) -> Path:
    return _write(path, render_csv(AGREEMENT_HEADER, agreement_rows(collection, entries), provenance))


def write_validity_map(path, points: Iterable[MapPoint], provenance: Optional[Dict[str, Any]] = None) -> Path:
    return _write(path, render_csv(VALIDITY_MAP_HEADER, ([p.h, p.mean_ap] for p in points), provenance))


def write_delta_ap(path, records: Iterable[DeltaAPRecord], provenance: Optional[Dict[str, Any]] = None) -> Path:
    rows = ([r.system, r.query, r.rep, r.delta_ap_pct, r.base_zero] for r in records)
    return _write(path, render_csv(DELTA_AP_HEADER, rows, provenance))
