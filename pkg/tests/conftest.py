"""Pytest configuration and shared fixtures."""

import pytest
import tempfile
import shutil
from pathlib import Path
from typing import Dict, Generator, List

from ir_significance_simulation.models.config_models import ExperimentConfig
from ir_significance_simulation.models.mixture_models import LogNormal, LogNormalMixture
from ir_significance_simulation.utils.config import ConfigManager

TEST_CONFIG_YAML = """
system:
  log_level: "DEBUG"

ingest:
  top_k: 1000
  min_docs_per_query: 10
  min_relevant_per_query: 5
  shift_epsilon: 0.001

validity:
  h: 0.05
  n_reps: 4
  h_grid: [0.0, 0.1]

profiles:
  desk:
    n_samples_per_list: 100
    n_repetitions: 5
    n_resamples: 200
    query_sizes: [5, 10]
    h_grid: [0.0, 0.1]
    map_simulations: 3
  paper:
    n_repetitions: 1000
    n_resamples: 100000
"""

SYNTHETIC_SPEC_YAML = """
systems:
  - name: synthetic
    queries: 10
    mixture: {lambda: 0.05, mu1: 1.2, sigma1: 0.4, mu0: 0.8, sigma0: 0.4}
"""


def make_run_text(tag: str, query_ids: List[str], n_docs: int = 20, offset: float = 0.0) -> str:
    """A run whose score falls with rank; document dN sits at rank N."""
    lines = []
    for query_id in query_ids:
        for rank in range(1, n_docs + 1):
            score = 30.0 - rank + offset + 0.01 * rank * rank
            lines.append(f"{query_id} Q0 d{rank} {rank} {score!r} {tag}")
    return "\n".join(lines) + "\n"


def make_qrels_text(query_ids: List[str], relevant: int = 6, judged: int = 15) -> str:
    """Documents d1..d{relevant} relevant, the rest of d1..d{judged} judged non-relevant."""
    lines = []
    for query_id in query_ids:
        for rank in range(1, judged + 1):
            lines.append(f"{query_id} 0 d{rank} {1 if rank <= relevant else 0}")
    return "\n".join(lines) + "\n"


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for tests."""
    temp_path = Path(tempfile.mkdtemp())
    try:
        yield temp_path
    finally:
        shutil.rmtree(temp_path)


@pytest.fixture
def config_file(temp_dir: Path) -> Path:
    path = temp_dir / "test_config.yaml"
    path.write_text(TEST_CONFIG_YAML)
    return path


@pytest.fixture
def test_config(config_file: Path) -> ConfigManager:
    """Create a test configuration manager."""
    return ConfigManager(config_file)


@pytest.fixture
def query_ids() -> List[str]:
    return ["301", "302", "303"]


@pytest.fixture
def run_files(temp_dir: Path, query_ids: List[str]) -> List[Path]:
    """Two usable runs and one that retrieves too few documents."""
    run_dir = temp_dir / "runs"
    run_dir.mkdir()
    paths = []
    for tag, n_docs, offset in [("sysA", 20, 0.0), ("sysB", 20, 2.5), ("sysShort", 3, 0.0)]:
        path = run_dir / f"{tag}.run"
        path.write_text(make_run_text(tag, query_ids, n_docs, offset))
        paths.append(path)
    return paths


@pytest.fixture
def qrels_file(temp_dir: Path, query_ids: List[str]) -> Path:
    path = temp_dir / "qrels.txt"
    path.write_text(make_qrels_text(query_ids))
    return path


@pytest.fixture
def synthetic_mixture() -> LogNormalMixture:
    """The ground-truth family of the calibration checks."""
    return LogNormalMixture(lam=0.05, l1=LogNormal(mu=1.2, sigma=0.4), l0=LogNormal(mu=0.8, sigma=0.4))


@pytest.fixture
def synthetic_models(synthetic_mixture: LogNormalMixture) -> Dict[str, Dict[str, LogNormalMixture]]:
    return {"synthetic": {f"q{i:02d}": synthetic_mixture for i in range(1, 51)}}


@pytest.fixture
def synthetic_spec_file(temp_dir: Path) -> Path:
    path = temp_dir / "synthetic.yaml"
    path.write_text(SYNTHETIC_SPEC_YAML)
    return path


@pytest.fixture
def desk_config() -> ExperimentConfig:
    """A small experiment configuration that runs in seconds."""
    return ExperimentConfig(
        n_samples_per_list=200,
        n_repetitions=10,
        n_resamples=300,
        alpha_grid=[0.01, 0.05, 0.1],
        h_grid=[0.0, 0.1],
        query_sizes=[10, 50],
        master_seed=42,
        map_simulations=3,
    )
