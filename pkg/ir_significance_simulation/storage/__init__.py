"""Storage of fitted models and experiment reports."""

from .model_store import read_models, write_models, load_synthetic_spec
from .report_store import write_type1, write_power, write_agreement, write_validity_map, write_delta_ap

__all__ = [
    "read_models",
    "write_models",
    "load_synthetic_spec",
    "write_type1",
    "write_power",
    "write_agreement",
    "write_validity_map",
    "write_delta_ap"
]
