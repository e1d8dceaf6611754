import json

import numpy as np
import pytest
from click.testing import CliRunner
from loguru import logger

from scorelab import __version__
from scorelab.cli.commands import cli
from scorelab.cli.config import ModelSetFile, RunConfig
from scorelab.cli.ingest import ingest_csv, read_survival
from scorelab.cli.report import RunReport, plain, read_report, write_report
from scorelab.config.settings import load_settings
from scorelab.errors import SchemaError, SpecificationError
from scorelab.workers.replicate_worker import ReplicatePool


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    for name in ("SCORELAB_SEED", "SCORELAB_JOBS", "SCORELAB_LOG_DIR", "SCORELAB_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("SCORELAB_LOG_LEVEL", "WARNING")
    monkeypatch.chdir(tmp_path)
    yield
    logger.remove()


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def invoke(*args):
    return CliRunner().invoke(cli, [str(a) for a in args], catch_exceptions=False)


def run_report(tmp_path, *args, name="report.json"):
    out = tmp_path / name
    result = invoke(*args, "--out", out)
    return result.exit_code, read_report(out)


class TestCommands:
    def test_version(self):
        result = invoke("--version")
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_estimate_symmetric_tsallis(self, tmp_path):
        data = write(tmp_path / "x.csv", "x\n-1\n1\n")
        code, report = run_report(
            tmp_path, "estimate", "--rule", "tsallis", "--gamma", 2, "--family", "normal-location", "--data", data
        )
        assert code == 0
        assert report["status"] == "ok"
        assert abs(report["results"]["estimate"]["theta_hat"][0]) < 1e-6
        assert report["diagnostics"]["converged"]

    def test_score_against_family(self, tmp_path):
        data = write(tmp_path / "x.csv", "x\n0\n1\n")
        code, report = run_report(
            tmp_path, "score", "--rule", "log", "--family", "normal-location", "--theta", "0", "--data", data
        )
        assert code == 0
        half_log_2pi = 0.5 * np.log(2.0 * np.pi)
        assert report["results"]["scores"] == pytest.approx([half_log_2pi, half_log_2pi + 0.5])
        assert report["results"]["n"] == 2

    def test_score_against_quote(self, tmp_path):
        data = write(tmp_path / "labels.csv", "x\nA\nB\nA\n")
        quote = write(tmp_path / "quote.csv", "label,probability\nA,0.5\nB,0.5\n")
        code, report = run_report(tmp_path, "score", "--rule", "log", "--data", data, "--distribution", quote)
        assert code == 0
        assert report["results"]["total"] == pytest.approx(3.0 * np.log(2.0))
        assert report["inputs"]["distribution"]["support_size"] == 2

    def test_gmrf_fit_hand_example(self, tmp_path):
        data = write(tmp_path / "chain.csv", "y1,y2,y3\n1,-1,2\n")
        code, report = run_report(tmp_path, "gmrf-fit", "--data", data)
        assert code == 0
        fit = report["results"]["hyvarinen"]
        assert fit["lambda_hat"] == pytest.approx(-6.0 / 11.0, rel=1e-12)
        assert fit["alpha_hat"] == pytest.approx(1.1, rel=1e-12)
        assert fit["beta_hat"] == pytest.approx(0.6, rel=1e-12)
        assert report["diagnostics"]["in_omega"] is False
        assert "note" in report["diagnostics"]

    def test_wishart_identity(self, tmp_path):
        data = write(tmp_path / "s.csv", "a,b\n1,0\n0,1\n")
        code, report = run_report(tmp_path, "wishart-fit", "--data", data, "--nu", 10)
        assert code == 0
        assert report["results"]["N"] == 2
        assert report["results"]["nu"] == 10

    def test_compare_duplicate_models_tie(self, tmp_path):
        write(tmp_path / "ones.csv", "c\n1\n1\n1\n1\n")
        y = write(tmp_path / "y.csv", "y\n0.2\n1.1\n-0.4\n0.9\n")
        models = write(
            tmp_path / "models.json",
            json.dumps({"models": [{"id": "a", "family": "normal-linear", "design": "ones.csv"}, {"id": "b", "design": "ones.csv"}]}),
        )
        code, report = run_report(tmp_path, "compare", "--rule", "hyvarinen", "--models", models, "--data", y)
        assert code == 0
        assert report["inputs"]["designs"]["b"]["family"] == "normal-linear"
        comparison = report["results"]["comparison"]
        assert comparison["ties"] == [["a", "b"]]
        assert comparison["differences"]["matrix"] == [[0.0, 0.0], [0.0, 0.0]]
        closed = report["results"]["closed_form"]
        for entry in comparison["models"]:
            assert entry["score"] == pytest.approx(closed[entry["model_id"]], abs=1e-6)
            assert entry["scale_arbitrary"] is True

    def test_compare_improper_log_is_partial(self, tmp_path):
        write(tmp_path / "ones.csv", "c\n1\n1\n1\n")
        y = write(tmp_path / "y.csv", "y\n0.2\n1.1\n-0.4\n")
        models = write(tmp_path / "models.json", json.dumps({"models": [{"id": "flat", "design": "ones.csv"}]}))
        code, report = run_report(tmp_path, "compare", "--rule", "log", "--models", models, "--data", y)
        assert code == 3
        assert report["status"] == "partial"
        assert report["diagnostics"]["failed_models"] == ["flat"]

    def test_preq(self, tmp_path):
        write(tmp_path / "ones.csv", "c\n1\n1\n1\n")
        y = write(tmp_path / "y.csv", "y\n0\n1\n2\n")
        models = write(tmp_path / "models.json", json.dumps({"models": [{"id": "m", "design": "ones.csv"}]}))
        code, report = run_report(tmp_path, "preq", "--models", models, "--data", y)
        assert code == 0
        scores = report["results"]["models"]["m"]
        assert scores["prequential"] == pytest.approx(-0.75 - 1.0 / 3.0)
        assert scores["batch"] == pytest.approx(-2.0)
        assert report["results"]["ranking"] == ["m"]

    def test_check_propriety(self, tmp_path):
        code, report = run_report(tmp_path, "check-propriety", "--rule", "brier", "--grid-step", 0.05)
        assert code == 0
        assert report["results"]["propriety"]["passed"] is True


class TestValidation:
    def test_missing_header(self, tmp_path):
        data = write(tmp_path / "x.csv", "1.0\n2.0\n")
        code, report = run_report(tmp_path, "estimate", "--rule", "log", "--family", "normal-location", "--data", data)
        assert code == 2
        assert report["status"] == "invalid"
        assert report["error"]["type"] == "SchemaError"
        assert report["error"]["row"] == 1

    def test_non_numeric_cell(self, tmp_path):
        data = write(tmp_path / "x.csv", "x\n1.0\nabc\n")
        code, report = run_report(tmp_path, "estimate", "--rule", "log", "--family", "normal-location", "--data", data)
        assert code == 2
        error = report["error"]
        assert (error["row"], error["column"], error["token"]) == (3, "x", "abc")

    def test_missing_option(self, tmp_path):
        data = write(tmp_path / "x.csv", "x\n1.0\n")
        code, report = run_report(tmp_path, "estimate", "--rule", "log", "--data", data)
        assert code == 2
        assert "--family" in report["error"]["message"]

    def test_unknown_rule(self, tmp_path):
        data = write(tmp_path / "x.csv", "x\n1.0\n")
        code, report = run_report(tmp_path, "estimate", "--rule", "spherical", "--family", "normal-location", "--data", data)
        assert code == 2
        assert "Unknown rule" in report["error"]["message"]

    def test_simulate_needs_seed(self, tmp_path):
        code, report = run_report(tmp_path, "simulate", "--study", "prequential")
        assert code == 2
        assert "--seed" in report["error"]["message"]

    def test_run_config_rules(self, tmp_path):
        with pytest.raises(SpecificationError, match="go together"):
            RunConfig.build(command="check-propriety", rule="log", grid_lo=-1.0)
        with pytest.raises(SpecificationError, match="--nu"):
            RunConfig.build(command="wishart-fit", data=write(tmp_path / "s.csv", "a\n1\n"))
        with pytest.raises(SpecificationError, match="file not found"):
            RunConfig.build(command="gmrf-fit", data=tmp_path / "missing.csv")


class TestDeterminism:
    def test_jobs_do_not_change_results(self, tmp_path):
        args = (
            "simulate", "--study", "unbiased", "--rule", "log", "--family", "normal-location",
            "--theta", "0.5", "--size", 200, "--replicates", 6, "--seed", 7,
        )
        code1, one = run_report(tmp_path, *args, "--jobs", 1, name="one.json")
        code4, four = run_report(tmp_path, *args, "--jobs", 4, name="four.json")
        assert code1 == code4 == 0
        one.pop("wall_clock_seconds")
        four.pop("wall_clock_seconds")
        assert one == four

    def test_seed_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SCORELAB_SEED", "7")
        args = ("simulate", "--study", "prequential", "--size", 20, "--replicates", 3, "--jobs", 1)
        code, from_env = run_report(tmp_path, *args, name="env.json")
        monkeypatch.delenv("SCORELAB_SEED")
        _, explicit = run_report(tmp_path, *args, "--seed", 7, name="explicit.json")
        assert code == 0
        assert from_env["config"]["seed"] == 7
        assert from_env["results"] == explicit["results"]


class TestReport:
    def test_round_trip(self, tmp_path):
        report = RunReport(command="score", config={"rule": "log"}, results={"x": np.float64(1.0) / 3.0, "v": np.arange(3)})
        out = tmp_path / "nested" / "r.json"
        write_report(report, out)
        loaded = read_report(out)
        assert loaded["results"]["x"] == 1.0 / 3.0
        assert loaded["results"]["v"] == [0, 1, 2]
        assert loaded["version"] == __version__

    def test_plain(self):
        assert plain({"a": (np.int64(2), np.bool_(True))}) == {"a": [2, True]}
        assert plain(np.array([[1.5]])) == [[1.5]]

    def test_config_echo_skips_jobs_and_out(self, tmp_path):
        config = RunConfig.build(command="check-propriety", rule="log", jobs=3, out=tmp_path / "r.json")
        echo = config.echo()
        assert "jobs" not in echo and "out" not in echo
        assert echo["rule"] == "log"


class TestIngest:
    def test_crlf_and_extra_columns(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_bytes(b"time,event,note\r\n1.5,1,7\r\n2.0,0,8\r\n")
        table = read_survival(path)
        assert table.columns == ("time", "event")
        assert table.column("time").tolist() == [1.5, 2.0]

    def test_bad_event(self, tmp_path):
        path = write(tmp_path / "t.csv", "time,event\n1.5,1\n2.0,2\n")
        with pytest.raises(SchemaError) as info:
            read_survival(path)
        assert info.value.row == 3
        assert info.value.column == "event"

    def test_empty_file(self, tmp_path):
        with pytest.raises(SchemaError, match="empty"):
            ingest_csv(write(tmp_path / "e.csv", ""))

    def test_model_set(self, tmp_path):
        write(tmp_path / "d.csv", "c\n1\n")
        path = write(tmp_path / "m.json", json.dumps({"models": [{"id": "a", "design": "d.csv"}, {"id": "a", "design": "d.csv"}]}))
        with pytest.raises(SchemaError, match="duplicate"):
            ModelSetFile.load(path)
        path = write(tmp_path / "m.json", json.dumps({"models": [{"id": "a", "design": "nope.csv"}]}))
        with pytest.raises(SchemaError, match="not found"):
            ModelSetFile.load(path)
        path = write(
            tmp_path / "m.json",
            json.dumps({"models": [{"id": "a", "design": "d.csv", "family": "normal_linear"}, {"id": "b", "design": "d.csv"}]}),
        )
        assert [m.family for m in ModelSetFile.load(path).models] == ["normal-linear", "normal-linear"]
        path = write(tmp_path / "m.json", json.dumps({"models": [{"id": "a", "design": "d.csv", "family": "poisson"}]}))
        with pytest.raises(SchemaError, match="unknown model family"):
            ModelSetFile.load(path)
        with pytest.raises(SchemaError, match="JSON"):
            ModelSetFile.load(write(tmp_path / "bad.json", "{"))


class TestInfrastructure:
    def test_pool_orders_and_records_failures(self):
        def work(i):
            if i == 3:
                raise ValueError("boom")
            return i * i

        with ReplicatePool(jobs=4) as pool:
            outcomes = pool.map(work, 10)
        assert [o.index for o in outcomes] == list(range(10))
        assert [o.value for o in outcomes if o.ok] == [i * i for i in range(10) if i != 3]
        assert outcomes[3].error == "ValueError: boom"
        assert ReplicatePool(jobs=2).map(work, 0) == []

    def test_settings(self, monkeypatch):
        monkeypatch.setenv("SCORELAB_JOBS", "not-a-number")
        monkeypatch.setenv("SCORELAB_SEED", "42")
        monkeypatch.setenv("SCORELAB_TOLERANCE", "1e-8")
        settings = load_settings()
        assert settings.jobs >= 1
        assert settings.seed == 42
        assert settings.tolerance == 1e-8
        monkeypatch.setenv("SCORELAB_SEED", "")
        assert load_settings().seed is None
