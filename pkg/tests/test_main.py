"""Tests for the command-line entry point."""

import csv
import logging

import pytest
import yaml

from ir_significance_simulation import main as cli
from ir_significance_simulation.core.trec_ingest import parse_qrels, parse_run
from ir_significance_simulation.models.significance_models import ALL_TESTS, TestOutcome
from ir_significance_simulation.storage.model_store import parse_synthetic_spec, write_models


def _rows(path):
    """CSV rows of a report, without provenance comments."""
    lines = [line for line in path.read_text().splitlines() if not line.startswith("#")]
    return list(csv.DictReader(lines))


def _comments(path):
    return dict(
        line[2:].split("=", 1) for line in path.read_text().splitlines() if line.startswith("# ")
    )


@pytest.fixture
def manifest_file(temp_dir, run_files, qrels_file):
    path = temp_dir / "manifest.yaml"
    path.write_text(yaml.safe_dump({
        "collection": "toy",
        "runs": [str(run_files[0].parent)],
        "qrels": str(qrels_file),
        "output_dir": str(temp_dir / "out"),
        "master_seed": 13,
    }))
    return path


@pytest.fixture
def run_cli(config_file):
    def _run(*args):
        return cli.main(["--config", str(config_file), *[str(a) for a in args]])
    return _run


class TestFit:
    def test_fits_every_system_and_query(self, run_cli, manifest_file, temp_dir, capsys):
        assert run_cli("fit", "--manifest", manifest_file) == 0

        models = _rows(temp_dir / "out" / "models.csv")
        assert len(models) == 6
        assert {row["system"] for row in models} == {"sysA", "sysB"}
        assert (temp_dir / "out" / "excluded.tsv").read_text().startswith("sysShort\t")

        out = capsys.readouterr().out
        assert "Systems submitted:     3" in out
        assert "Systems used:          2" in out

    def test_missing_qrels_named(self, run_cli, temp_dir, run_files, capsys):
        manifest = temp_dir / "bad.yaml"
        missing = temp_dir / "no-such.qrels"
        manifest.write_text(yaml.safe_dump({"collection": "toy", "runs": [str(run_files[0])], "qrels": str(missing)}))

        assert run_cli("fit", "--manifest", manifest) == 1
        assert str(missing) in capsys.readouterr().err

    def test_malformed_run_is_an_input_error(self, run_cli, temp_dir, qrels_file):
        bad_run = temp_dir / "bad.run"
        bad_run.write_text("301 Q0 d1 1 abc sysX\n")
        manifest = temp_dir / "m.yaml"
        manifest.write_text(yaml.safe_dump({"collection": "toy", "runs": [str(bad_run)], "qrels": str(qrels_file)}))

        assert run_cli("fit", "--manifest", manifest) == 1


class TestType1Command:
    def test_synthetic_spec(self, run_cli, synthetic_spec_file, temp_dir, capsys):
        out = temp_dir / "t1"

        assert run_cli("type1", "--synthetic", synthetic_spec_file, "--seed", 5, "--out", out) == 0

        rows = _rows(out / "type1.csv")
        at_five = {row["test"] for row in rows if float(row["alpha"]) == 0.05}
        assert at_five == {t.value for t in ALL_TESTS}
        assert (out / "agreement.csv").exists()
        assert _comments(out / "type1.csv")["seed"] == "5"
        assert "Type-I error at alpha=0.05" in capsys.readouterr().out

    def test_alpha_grid_override(self, run_cli, synthetic_spec_file, temp_dir):
        out = temp_dir / "t1"

        assert run_cli("type1", "--synthetic", synthetic_spec_file, "--seed", 5, "--out", out,
                       "--alpha-grid", "0.01,0.05,0.1") == 0

        # test config: query sizes 5 and 10
        assert len(_rows(out / "type1.csv")) == 3 * 5 * 2

    def test_rerun_and_thread_count_are_byte_identical(self, run_cli, synthetic_spec_file, temp_dir):
        for name, threads in [("a", 1), ("b", 1), ("c", 4)]:
            assert run_cli("type1", "--synthetic", synthetic_spec_file, "--seed", 8,
                           "--out", temp_dir / name, "--threads", threads) == 0

        first = (temp_dir / "a" / "type1.csv").read_bytes()
        assert (temp_dir / "b" / "type1.csv").read_bytes() == first
        assert (temp_dir / "c" / "type1.csv").read_bytes() == first

    def test_seed_chosen_when_omitted(self, run_cli, synthetic_spec_file, temp_dir, capsys):
        out = temp_dir / "t1"

        assert run_cli("type1", "--synthetic", synthetic_spec_file, "--out", out, "--reps", 2) == 0

        printed = capsys.readouterr().out
        seed = _comments(out / "type1.csv")["seed"]
        assert f"Using master seed {seed}" in printed

    def test_models_fitted_from_manifest(self, run_cli, manifest_file, temp_dir):
        out = temp_dir / "t1"

        assert run_cli("type1", "--manifest", manifest_file, "--queries", "3", "--out", out) == 0

        rows = _rows(out / "type1.csv")
        assert {row["collection"] for row in rows} == {"toy"}
        assert {row["n_queries"] for row in rows} == {"3"}

    def test_query_size_beyond_model_set_is_warned(self, run_cli, synthetic_spec_file, temp_dir, caplog):
        with caplog.at_level(logging.WARNING, logger="ir_significance_simulation"):
            assert run_cli("type1", "--synthetic", synthetic_spec_file, "--seed", 5,
                           "--out", temp_dir / "t1", "--queries", "5,50") == 0

        assert any("exceed the 10 queries" in r.getMessage() for r in caplog.records)

    def test_empty_model_file(self, run_cli, temp_dir):
        models = temp_dir / "models.csv"
        models.write_text("")

        assert run_cli("type1", "--models", models, "--out", temp_dir / "t1") == 1

    def test_no_model_source(self, run_cli, temp_dir):
        assert run_cli("type1", "--out", temp_dir / "t1") == 1

    def test_every_trial_failing_is_a_numerical_failure(self, run_cli, synthetic_spec_file, temp_dir, monkeypatch):
        def failing(d, alpha, cfg):
            return [
                TestOutcome(test_name=t, statistic=0.0, p_value=1.0, n_effective=len(d), error="boom").decide(alpha)
                for t in ALL_TESTS
            ]

        monkeypatch.setattr("ir_significance_simulation.core.experiments.run_all_tests", failing)

        assert run_cli("type1", "--synthetic", synthetic_spec_file, "--seed", 1, "--out", temp_dir / "t1") == 2


class TestPowerCommand:
    def test_rows_and_agreement(self, run_cli, synthetic_spec_file, temp_dir, capsys):
        out = temp_dir / "p"

        assert run_cli("power", "--synthetic", synthetic_spec_file, "--seed", 5, "--out", out,
                       "--h-grid", "0,0.05,0.1") == 0

        assert len(_rows(out / "power.csv")) == 3 * 5 * 2
        assert len(_rows(out / "power_agreement.csv")) == 3 * 10 * 2
        assert "Power at alpha=0.05" in capsys.readouterr().out

    def test_zero_effect_rows_match_type1(self, run_cli, synthetic_spec_file, temp_dir):
        assert run_cli("type1", "--synthetic", synthetic_spec_file, "--seed", 5, "--out", temp_dir / "t") == 0
        assert run_cli("power", "--synthetic", synthetic_spec_file, "--seed", 5, "--out", temp_dir / "p") == 0

        type1 = {(r["test"], r["n_queries"]): r["rejection_rate"]
                 for r in _rows(temp_dir / "t" / "type1.csv") if float(r["alpha"]) == 0.05}
        power = {(r["test"], r["n_queries"]): r["p_reject"]
                 for r in _rows(temp_dir / "p" / "power.csv") if float(r["h"]) == 0.0}
        assert power == type1


class TestValidityCommand:
    def test_record_counts(self, run_cli, synthetic_spec_file, temp_dir):
        out = temp_dir / "v"

        assert run_cli("validity", "--synthetic", synthetic_spec_file, "--seed", 2, "--out", out, "--reps", 6) == 0

        assert len(_rows(out / "delta_ap.csv")) == 1 * 10 * 6
        assert [float(r["h"]) for r in _rows(out / "validity_map.csv")] == [0.0, 0.1]

    def test_all_relevant_model_has_perfect_map(self, run_cli, temp_dir):
        spec = temp_dir / "perfect.yaml"
        spec.write_text("systems:\n  - name: p\n    queries: 2\n"
                        "    mixture: {lambda: 1.0, mu1: 1.0, sigma1: 0.4, mu0: 0.5, sigma0: 0.4}\n")
        out = temp_dir / "v"

        assert run_cli("validity", "--synthetic", spec, "--seed", 2, "--out", out) == 0

        assert {float(r["mean_ap"]) for r in _rows(out / "validity_map.csv")} == {1.0}

    def test_empty_model_file(self, run_cli, temp_dir):
        models = temp_dir / "models.csv"
        models.write_text("system,query,lambda,mu1,sigma1,mu0,sigma0\n")

        assert run_cli("validity", "--models", models, "--out", temp_dir / "v") == 1


class TestTestCommand:
    @staticmethod
    def _p_values(out):
        lines = out.splitlines()
        start = next(i for i, line in enumerate(lines) if line.startswith("test"))
        return {line.split()[0]: float(line.split()[2]) for line in lines[start + 1:start + 6]}

    def test_identical_columns(self, run_cli, temp_dir, capsys):
        ap_file = temp_dir / "ap.txt"
        ap_file.write_text("0.1 0.1\n0.4 0.4\n0.35 0.35\n")

        assert run_cli("test", ap_file, "--seed", 1) == 0

        p_values = self._p_values(capsys.readouterr().out)
        assert p_values == {t.value: 1.0 for t in ALL_TESTS}

    def test_t_test_value(self, run_cli, temp_dir, capsys):
        ap_file = temp_dir / "ap.csv"
        ap_file.write_text("# query,a,b\n" + "".join(f"q{i},0.0,{i / 10}\n" for i in range(1, 6)))

        assert run_cli("test", ap_file, "--seed", 1, "--alpha", 0.05) == 0

        assert self._p_values(capsys.readouterr().out)["ttest"] == pytest.approx(0.0132, abs=5e-5)

    def test_single_row(self, run_cli, temp_dir):
        ap_file = temp_dir / "ap.txt"
        ap_file.write_text("0.1 0.2\n")

        assert run_cli("test", ap_file) == 1

    @pytest.mark.parametrize("content", ["0.1 1.2\n0.3 0.4\n", "0.1 x\n0.3 0.4\n", "0.1\n0.3 0.4\n"])
    def test_bad_rows(self, run_cli, temp_dir, content):
        ap_file = temp_dir / "ap.txt"
        ap_file.write_text(content)

        assert run_cli("test", ap_file) == 1


class TestSimulateRunCommand:
    def test_writes_run_qrels_and_rankings(self, run_cli, temp_dir):
        models_path = write_models(temp_dir / "models.csv", parse_synthetic_spec(
            "systems:\n  - name: s\n    queries: 3\n"
            "    mixture: {lambda: 0.2, mu1: 1.2, sigma1: 0.4, mu0: 0.8, sigma0: 0.4}\n"
        ))
        out = temp_dir / "sim"

        assert run_cli("simulate-run", "--models", models_path, "--out", out, "--seed", 3, "--dump-rankings") == 0

        run = parse_run((out / "synthetic.run").read_text())
        judgments = parse_qrels((out / "synthetic.qrels").read_text())
        assert run.system_tag == "synthetic"
        assert run.query_ids == ["q1", "q2", "q3"]
        # test config: 100 samples per list
        assert run.n_entries() == 3 * 100
        assert len(judgments) == 3 * 100
        assert sorted((out / "rankings").iterdir())[0].name == "q1.tsv"

    def test_reproducible(self, run_cli, temp_dir):
        models_path = write_models(temp_dir / "models.csv", parse_synthetic_spec(
            "systems:\n  - name: s\n    queries: 2\n"
            "    mixture: {lambda: 0.2, mu1: 1.2, sigma1: 0.4, mu0: 0.8, sigma0: 0.4}\n"
        ))

        for name in ("a", "b"):
            assert run_cli("simulate-run", "--models", models_path, "--out", temp_dir / name, "--seed", 3) == 0

        assert (temp_dir / "a" / "synthetic.run").read_bytes() == (temp_dir / "b" / "synthetic.run").read_bytes()

    def test_unknown_system(self, run_cli, temp_dir):
        models_path = write_models(temp_dir / "models.csv", parse_synthetic_spec(
            "systems:\n  - name: s\n    queries: 1\n"
            "    mixture: {lambda: 0.2, mu1: 1.2, sigma1: 0.4, mu0: 0.8, sigma0: 0.4}\n"
        ))

        assert run_cli("simulate-run", "--models", models_path, "--system", "other") == 1
