"""Scenario schema, template generation, run orchestration, CSV round-trip,
and the command-line interface."""

import io
import json
import os

import numpy as np
import pytest

from stiefel_sync.cli import (
    EXIT_AUDIT,
    EXIT_OK,
    EXIT_SCENARIO,
    main,
)
from stiefel_sync.errors import ScenarioError, ValidationError
from stiefel_sync.integrate import IntegratorConfig, integrate
from stiefel_sync.manifold import random_ensemble
from stiefel_sync.model import ModelConfig, Topology, zero_frequencies
from stiefel_sync.scenario import Scenario, generate_scenario, run_scenario
from stiefel_sync.series_io import emit_series, read_series

BUNDLED = os.path.join(os.path.dirname(__file__), "..", "src", "stiefel_sync", "scenarios")


def minimal_scenario(tmp_path, **overrides):
    raw = {
        "name": "tiny",
        "dims": {"n": 3, "p": 1, "N": 3},
        "kappa": 1.5,
        "topology": {"kind": "separable", "xi": [1.0, 1.0, 1.0]},
        "frequencies": {"kind": "zero"},
        "initial": {"kind": "near_consensus", "radius": 0.2, "seed": 1},
        "integrator": {"h": 0.002, "t_end": 6.0, "record_stride": 5},
        "analyses": ["consensus"],
    }
    raw.update(overrides)
    path = tmp_path / f"{raw.get('name', 'tiny')}.json"
    path.write_text(json.dumps(raw))
    return str(path)


class TestScenarioParsing:
    def test_missing_kappa_names_field(self, tmp_path):
        path = tmp_path / "bad.json"
        raw = json.loads(open(minimal_scenario(tmp_path)).read())
        del raw["kappa"]
        path.write_text(json.dumps(raw))
        with pytest.raises(ScenarioError) as err:
            Scenario.from_file(path)
        assert err.value.field == "kappa"

    def test_unknown_field_rejected(self, tmp_path):
        path = minimal_scenario(tmp_path)
        raw = json.loads(open(path).read())
        raw["kapa"] = 1.0
        open(path, "w").write(json.dumps(raw))
        with pytest.raises(ScenarioError) as err:
            Scenario.from_file(path)
        assert "kapa" in str(err.value)

    def test_xi_length_mismatch(self, tmp_path):
        path = minimal_scenario(tmp_path, topology={"kind": "separable", "xi": [1.0, 1.0]})
        with pytest.raises(ScenarioError) as err:
            Scenario.from_file(path)
        assert err.value.field == "topology.xi"

    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"name": "x",\n  "dims": }')
        with pytest.raises(ScenarioError) as err:
            Scenario.from_file(path)
        assert "line 2" in str(err.value)

    def test_separable_only_analyses_rejected_on_general(self, tmp_path):
        path = minimal_scenario(
            tmp_path,
            topology={"kind": "general", "weights": [[0, 1, 1], [1, 0, 1], [1, 1, 0]]},
            analyses=["audits"],
        )
        with pytest.raises(ScenarioError) as err:
            Scenario.from_file(path)
        assert "separable" in str(err.value)

    def test_expectation_requires_matching_analysis(self, tmp_path):
        path = minimal_scenario(tmp_path, analyses=[], expect={"consensus": "complete"})
        with pytest.raises(ScenarioError):
            Scenario.from_file(path)

    def test_explicit_state_file(self, tmp_path):
        states = random_ensemble(3, 1, 3, seed=2)
        np.save(tmp_path / "init.npy", states)
        path = minimal_scenario(tmp_path, initial={"kind": "file", "path": "init.npy"})
        scenario = Scenario.from_file(path)
        assert np.array_equal(scenario.initial, states)

    def test_weights_matrix_accepted(self, tmp_path):
        path = minimal_scenario(
            tmp_path,
            topology={"kind": "general", "weights": [[0, 1, 0.5], [1, 0, 1], [0.5, 1, 0]]},
        )
        scenario = Scenario.from_file(path)
        assert scenario.model.topology.kind == "general"


class TestGeneration:
    def test_deterministic_bytes(self, tmp_path):
        a = generate_scenario("homogeneous", 7, {}, str(tmp_path / "a.json"))
        b = generate_scenario("homogeneous", 7, {}, str(tmp_path / "b.json"))
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_framework_template_satisfies_conditions(self, tmp_path):
        from stiefel_sync.model import check_framework

        path = generate_scenario(
            "heterogeneous-framework", 21, {}, str(tmp_path / "fw.json")
        )
        scenario = Scenario.from_file(path)
        assert check_framework(scenario.model, scenario.initial).satisfied

    def test_override_applies(self, tmp_path):
        path = generate_scenario(
            "homogeneous", 3, {"dims.n": 5, "kappa": 3.5}, str(tmp_path / "o.json")
        )
        raw = json.load(open(path))
        assert raw["dims"]["n"] == 5
        assert raw["kappa"] == 3.5

    def test_unsatisfiable_override_is_generation_error(self, tmp_path):
        # a huge weight spread breaks the spread condition regardless of kappa
        with pytest.raises(ScenarioError):
            generate_scenario(
                "heterogeneous-framework",
                4,
                {"topology.spread": 0.9},
                str(tmp_path / "x.json"),
            )

    def test_unknown_template(self, tmp_path):
        with pytest.raises(ScenarioError):
            generate_scenario("mystery", 0, {}, str(tmp_path / "m.json"))


class TestSeriesIO:
    def make_traj(self):
        cfg = ModelConfig(
            kappa=1.0,
            topology=Topology.separable(np.ones(2)),
            freqs=zero_frequencies(2, 1),
            n=3,
            p=1,
        )
        init = random_ensemble(3, 1, 2, seed=3)
        return integrate(init, cfg, IntegratorConfig(h=1e-2, t_end=0.5, record_stride=5))

    def test_round_trip_bitwise(self, tmp_path):
        traj = self.make_traj()
        rng = np.random.default_rng(4)
        extra = {"V": rng.uniform(size=traj.times.shape) * 1e-7}
        path = tmp_path / "series.csv"
        emit_series(traj, extra, path)
        back = read_series(path)
        assert list(back) == ["t", "drift", "diam_S", "V"]
        assert np.array_equal(back["t"], traj.times)
        assert np.array_equal(back["drift"], traj.drift)
        assert np.array_equal(back["diam_S"], traj.diameters)
        assert np.array_equal(back["V"], extra["V"])

    def test_empty_trajectory_guard(self, tmp_path):
        traj = self.make_traj()
        empty = type(traj)(
            times=np.empty(0),
            states=np.empty((0, 2, 3, 1)),
            drift=np.empty(0),
            diameters=np.empty(0),
        )
        target = tmp_path / "never.csv"
        with pytest.raises(ValidationError):
            emit_series(empty, {}, target)
        assert not target.exists()

    def test_misaligned_column_rejected_without_partial_file(self, tmp_path):
        traj = self.make_traj()
        target = tmp_path / "never.csv"
        with pytest.raises(Exception):
            emit_series(traj, {"V": np.ones(3)}, target)
        assert not target.exists()


class TestRunScenario:
    def test_bundled_homogeneous_complete(self, tmp_path):
        report = run_scenario(
            os.path.join(BUNDLED, "homogeneous_complete.json"), out_dir=str(tmp_path)
        )
        assert report.ok
        assert report.consensus["kind"] == "complete"
        for artifact in report.artifacts:
            assert os.path.exists(artifact)

    def test_pair_csv_columns(self, tmp_path):
        path = minimal_scenario(
            tmp_path,
            name="paircols",
            analyses=["consensus", {"stability": {"p_exp": [1.0, 2.0]}}],
        )
        report = run_scenario(path, out_dir=str(tmp_path))
        pair_csv = [a for a in report.artifacts if a.endswith("_pair.csv")]
        assert pair_csv
        columns = read_series(pair_csv[0])
        for required in ("t", "drift", "diam_S", "diam_A", "corr_sq", "corr_skew_sq",
                         "diam_S_tilde", "dist_l1", "dist_l2", "dist_agent_0"):
            assert required in columns
        assert report.gain is not None
        assert set(report.gain) == {"1.0", "2.0"}

    def test_report_json_schema(self, tmp_path):
        path = minimal_scenario(tmp_path, name="schema", expect={"consensus": "complete"})
        report = run_scenario(path, out_dir=str(tmp_path))
        on_disk = json.load(open(os.path.join(str(tmp_path), "schema_report.json")))
        for key in ("scenario", "framework", "cubic", "consensus", "decay", "gain",
                    "audits", "artifacts", "expectations", "ok"):
            assert key in on_disk
        assert on_disk["scenario"] == "schema"
        assert on_disk["consensus"]["kind"] == "complete"
        assert on_disk["ok"] is True

    def test_unmet_expectation_reported(self, tmp_path):
        # a decoupled heterogeneous run cannot reach complete consensus
        path = minimal_scenario(
            tmp_path,
            name="unmet",
            dims={"n": 3, "p": 2, "N": 3},
            kappa=0.0,
            frequencies={"kind": "random", "spread": 1.0, "seed": 5},
            initial={"kind": "random", "seed": 6},
            expect={"consensus": "complete"},
        )
        report = run_scenario(path, out_dir=str(tmp_path))
        assert not report.ok
        assert report.expectations[0]["ok"] is False


class TestCli:
    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exits:
            main(["--version"])
        assert exits.value.code == 0
        assert "stiefel-sync" in capsys.readouterr().out

    def test_gen_and_run_roundtrip(self, tmp_path):
        out = io.StringIO()
        code = main(
            [
                "gen",
                "homogeneous",
                "--seed",
                "9",
                "--set",
                "name=quick",
                "--set",
                "integrator.t_end=12.0",
                "--out",
                str(tmp_path / "quick.json"),
            ],
            out=out,
            err=out,
        )
        assert code == EXIT_OK
        code = main(
            ["run", str(tmp_path / "quick.json"), "--out", str(tmp_path)], out=out, err=out
        )
        assert code == EXIT_OK
        text = out.getvalue()
        assert "consensus: complete" in text

    def test_run_resolves_bundled_name(self, tmp_path):
        out = io.StringIO()
        code = main(
            ["run", "kuramoto_circle", "--out", str(tmp_path)], out=out, err=out
        )
        assert code == EXIT_OK

    def test_malformed_config_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        err = io.StringIO()
        code = main(["run", str(bad), "--out", str(tmp_path)], out=err, err=err)
        assert code == EXIT_SCENARIO

    def test_missing_scenario_exit_code(self, tmp_path):
        err = io.StringIO()
        code = main(["run", "no_such_scenario", "--out", str(tmp_path)], out=err, err=err)
        assert code == EXIT_SCENARIO

    def test_end_to_end_determinism(self, tmp_path):
        path = minimal_scenario(tmp_path, name="determinism")
        out = io.StringIO()
        dir_a, dir_b = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(["run", path, "--out", dir_a], out=out, err=out) == EXIT_OK
        assert main(["run", path, "--out", dir_b], out=out, err=out) == EXIT_OK
        csv_a = open(os.path.join(dir_a, "determinism.csv"), "rb").read()
        csv_b = open(os.path.join(dir_b, "determinism.csv"), "rb").read()
        assert csv_a == csv_b

    def test_batch_run_with_thread_cap(self, tmp_path, monkeypatch):
        monkeypatch.setenv("STIEFEL_SYNC_THREADS", "2")
        p1 = minimal_scenario(tmp_path, name="batch_one")
        p2 = minimal_scenario(tmp_path, name="batch_two")
        out = io.StringIO()
        code = main(["run", p1, p2, "--out", str(tmp_path)], out=out, err=out)
        assert code == EXIT_OK
        assert os.path.exists(tmp_path / "batch_one_report.json")
        assert os.path.exists(tmp_path / "batch_two_report.json")

    def test_audit_subcommand_on_single_column_pair(self, tmp_path):
        # single-column scenario: every stated bound holds, audit exits clean
        path = minimal_scenario(
            tmp_path,
            name="audit_me",
            integrator={"h": 0.002, "t_end": 4.0, "record_stride": 1},
            analyses=["consensus", {"stability": {"p_exp": [1.0]}}],
        )
        out = io.StringIO()
        assert main(["run", path, "--out", str(tmp_path)], out=out, err=out) == EXIT_OK
        pair_csv = str(tmp_path / "audit_me_pair.csv")
        code = main(["audit", pair_csv, "--config", path], out=out, err=out)
        assert code == EXIT_OK
        assert "audit diameter_bound" in out.getvalue()
        assert "audit correlation_contraction" in out.getvalue()
        assert "audit agent_distance_bound" in out.getvalue()

    def test_audit_subcommand_flags_two_column_deficit(self, tmp_path):
        # the bundled heterogeneous scenario has two columns; the stated
        # correlation bound is too strong there and the audit must say so
        out = io.StringIO()
        code = main(
            ["run", "framework_hetero", "--out", str(tmp_path)], out=out, err=out
        )
        assert code == EXIT_AUDIT
        pair_csv = str(tmp_path / "framework_hetero_pair.csv")
        code = main(
            ["audit", pair_csv, "--config", "framework_hetero"], out=out, err=out
        )
        assert code == EXIT_AUDIT
        text = out.getvalue()
        assert "audit correlation_contraction" in text
        assert "FAIL" in text
