"""CLI subcommands: files in, files out, exit codes, determinism."""

import json
import os

import numpy as np
import pytest

from cadence.cli import main
from cadence.ingest import assemble_events, parse_csv
from cadence.priors import GaussianPrior

FAST = ["--chains", "2", "--draws", "200", "--warmup", "200"]


def run_cli(*argv):
    return main(list(argv))


class TestSimulate:
    def test_expected_count(self, tmp_path):
        out = tmp_path / "sim.csv"
        assert run_cli("simulate", "--n-events", "200", "--beta", "2,0,0,0",
                       "--out", str(out), "--seed", "1") == 0
        events = assemble_events(parse_csv(out.read_bytes()), 7.0)
        mean_count = np.mean([len(e.arrivals) for e in events])
        assert mean_count == pytest.approx(14.0, abs=1.0)
        truth = json.loads((tmp_path / "sim.csv.truth.json").read_text())
        assert truth["beta"] == [2.0, 0.0, 0.0, 0.0]

    def test_zero_events_header_only(self, tmp_path):
        out = tmp_path / "empty.csv"
        assert run_cli("simulate", "--n-events", "0", "--beta", "1,0",
                       "--out", str(out)) == 0
        assert out.read_text() == "event_id,tca,creation_date\n"

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            run_cli("simulate", "--n-events", "20", "--beta", "1.5,0.2",
                    "--out", str(out), "--seed", "9")
        assert a.read_bytes() == b.read_bytes()


class TestFitPrior:
    def simulate(self, tmp_path, n, beta="1.2,0.25,-0.02,0.001", seed="3"):
        data = tmp_path / "train.csv"
        run_cli("simulate", "--n-events", str(n), "--beta", beta,
                "--out", str(data), "--seed", seed)
        return data

    def test_recovers_dominant_coefficients(self, tmp_path):
        # Small alpha: the default shrinkage is visible at single-event count
        # magnitudes and would bias the pooled means.
        data = self.simulate(tmp_path, 400, beta="3.0,0.8")
        out = tmp_path / "prior.json"
        assert run_cli("fit-prior", "--train", str(data), "--out", str(out),
                       "--alpha", "0.01", "--degree", "1") == 0
        prior = GaussianPrior.from_json(out.read_text())
        assert prior.mu[0] == pytest.approx(3.0, rel=0.10)
        assert prior.mu[1] == pytest.approx(0.8, rel=0.10)

    def test_single_event_sigma_floored(self, tmp_path):
        data = self.simulate(tmp_path, 1)
        out = tmp_path / "prior.json"
        run_cli("fit-prior", "--train", str(data), "--out", str(out))
        prior = GaussianPrior.from_json(out.read_text())
        assert all(s == pytest.approx(1e-3) for s in prior.sigma)

    def test_empty_csv_fails(self, tmp_path):
        data = tmp_path / "empty.csv"
        data.write_text("event_id,tca,creation_date\n")
        assert run_cli("fit-prior", "--train", str(data),
                       "--out", str(tmp_path / "p.json")) == 1


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """simulate -> fit-prior -> predict -> evaluate with small settings."""
    root = tmp_path_factory.mktemp("pipeline")
    data = root / "data.csv"
    prior = root / "prior.json"
    runs = root / "runs.jsonl"
    report = root / "report.json"
    run_cli("simulate", "--n-events", "30", "--beta", "1.2,0.25,-0.02,0.001",
            "--out", str(data), "--seed", "17")
    run_cli("fit-prior", "--train", str(data), "--out", str(prior))
    assert run_cli("predict", "--data", str(data), "--prior", str(prior),
                   "--out", str(runs), *FAST, "--seed", "17") == 0
    assert run_cli("evaluate", "--runs", str(runs), "--out", str(report)) == 0
    return root


class TestPredictAndEvaluate:
    def test_jsonl_schema(self, pipeline):
        rows = [json.loads(line) for line in (pipeline / "runs.jsonl").read_text().splitlines()]
        assert rows
        models = {r["model"] for r in rows}
        assert models == {"nhpp", "naive", "mean"}
        for row in rows:
            assert {"event_id", "model", "cutoff_days_to_tca", "predicted_days_to_tca",
                    "lower95", "upper95", "censored", "actual_days_to_tca"} <= row.keys()
        nhpp = [r for r in rows if r["model"] == "nhpp" and not r["censored"]
                and "error" not in r]
        for row in nhpp:
            if row["lower95"] is not None and row["upper95"] is not None:
                assert row["lower95"] <= row["upper95"]

    def test_report_contents(self, pipeline):
        report = json.loads((pipeline / "report.json").read_text())
        assert [entry["model"] for entry in report] == ["nhpp", "naive", "mean"]
        for entry in report:
            assert entry["mae"] <= entry["rmse"] + 1e-12

    def test_missing_prior_file(self, pipeline):
        code = run_cli("predict", "--data", str(pipeline / "data.csv"),
                       "--prior", str(pipeline / "nope.json"),
                       "--out", str(pipeline / "x.jsonl"), *FAST)
        assert code == 1

    def test_insufficient_history_reported_inline(self, tmp_path):
        data = tmp_path / "thin.csv"
        # One CDM, 1 day before TCA: after the cutoff, so no usable history.
        data.write_text(
            "event_id,tca,creation_date\n"
            "E1,2030-01-10T00:00:00Z,2030-01-09T00:00:00Z\n"
        )
        prior_path = tmp_path / "prior.json"
        prior_path.write_text(GaussianPrior((1.0, 0.0), (0.5, 0.1)).to_json())
        out = tmp_path / "runs.jsonl"
        assert run_cli("predict", "--data", str(data), "--prior", str(prior_path),
                       "--out", str(out), *FAST) == 0
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert all("error" in r for r in rows)


class TestPlotData:
    def test_sequence_counting_contract(self, tmp_path):
        data = tmp_path / "one.csv"
        data.write_text(
            "event_id,tca,creation_date\n"
            "E1,2030-01-10T00:00:00Z,2030-01-04T00:00:00Z\n"
            "E1,2030-01-10T00:00:00Z,2030-01-05T12:00:00Z\n"
            "E1,2030-01-10T00:00:00Z,2030-01-07T00:00:00Z\n"
        )
        prior_path = tmp_path / "prior.json"
        prior_path.write_text(
            GaussianPrior((1.0, 0.0, 0.0, 0.0), (0.5, 0.1, 0.05, 0.01)).to_json()
        )
        runs = tmp_path / "seq.jsonl"
        assert run_cli("predict", "--data", str(data), "--prior", str(prior_path),
                       "--out", str(runs), "--sequence", *FAST) == 0
        out = tmp_path / "plot.csv"
        assert run_cli("plot-data", "--runs", str(runs), "--event-id", "E1",
                       "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "kind,t_days_to_tca,value,model"
        kinds = [line.split(",")[0] for line in lines[1:]]
        assert kinds.count("arrival") == 3
        nhpp_rows = [line for line in lines[1:] if line.endswith(",nhpp")]
        predictions = [l for l in nhpp_rows if l.startswith("prediction,")]
        bounds = [l for l in nhpp_rows if l.startswith("bound,")]
        assert len(predictions) == 2
        assert len(bounds) <= 4  # bounds beyond the horizon are absent

    def test_unknown_event(self, pipeline):
        assert run_cli("plot-data", "--runs", str(pipeline / "runs.jsonl"),
                       "--event-id", "NOPE", "--out", str(pipeline / "p.csv")) == 1

    def test_empty_runs_file(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        assert run_cli("plot-data", "--runs", str(empty), "--event-id", "E1",
                       "--out", str(tmp_path / "p.csv")) == 1


class TestConfigResolution:
    def test_env_seed_overrides_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CADENCE_SEED", "77")
        a = tmp_path / "a.csv"
        run_cli("simulate", "--n-events", "5", "--beta", "2,0", "--out", str(a))
        monkeypatch.delenv("CADENCE_SEED")
        b = tmp_path / "b.csv"
        run_cli("simulate", "--n-events", "5", "--beta", "2,0", "--out", str(b),
                "--seed", "77")
        assert a.read_bytes() == b.read_bytes()

    def test_flag_wins_over_config_file(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"seed": 1, "window_days": 7.0}))
        a = tmp_path / "a.csv"
        run_cli("simulate", "--n-events", "5", "--beta", "2,0", "--out", str(a),
                "--config", str(config), "--seed", "2")
        b = tmp_path / "b.csv"
        run_cli("simulate", "--n-events", "5", "--beta", "2,0", "--out", str(b),
                "--seed", "2")
        assert a.read_bytes() == b.read_bytes()

    def test_invalid_config_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run_cli("simulate", "--n-events", "1", "--beta", "1,0",
                    "--out", str(tmp_path / "x.csv"), "--cutoff", "9.0")
        assert err.value.code == 2

    def test_help_available(self, capsys):
        for command in ("simulate", "fit-prior", "predict", "evaluate", "plot-data"):
            with pytest.raises(SystemExit) as err:
                run_cli(command, "--help")
            assert err.value.code == 0
            assert "usage" in capsys.readouterr().out
