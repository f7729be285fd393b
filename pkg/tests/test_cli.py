"""Command-line interface: exit codes, report files, replay, determinism."""

import json

import numpy as np
import pytest

from blockassoc.cli import run

PD4 = "[[1,-0.5,0.1,0],[-0.5,1,0,0.2],[0.1,0,1,-0.4],[0,0.2,-0.4,1]]"
ANTI2 = "[[1,-1],[-1,1]]"


def read_report(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def strip_timestamp(report):
    report = dict(report)
    report.pop("metadata", None)
    return report


class TestExitCodes:
    def test_pass_is_zero(self):
        assert run(["check-gaussian", "--sigma", PD4, "--blocks", "[[1,2],[3,4]]"]) == 0

    def test_violation_is_one(self):
        assert run(["check-gaussian", "--sigma", ANTI2, "--blocks", "singleton"]) == 1

    def test_inconclusive_is_two(self):
        triplet = json.dumps(
            {
                "drift": [0, 0],
                "gaussian": [[1, 0], [0, 1]],
                "levy": {"atoms": [{"x": [1, -1], "mass": 0.5}]},
            }
        )
        assert run(["check-id", "--triplet", triplet, "--blocks", "singleton"]) == 2

    def test_unknown_subcommand_is_three(self):
        assert run(["frobnicate"]) == 3

    def test_missing_file_is_three(self):
        assert run(["check-gaussian", "--sigma", "/no/such/file.json", "--blocks", "single"]) == 3

    def test_malformed_partition_is_three(self):
        assert run(["check-gaussian", "--sigma", ANTI2, "--blocks", "[[1],[1,2]]"]) == 3


class TestCheckers:
    def test_single_block_vacuous_pass(self):
        assert run(["check-gaussian", "--sigma", ANTI2, "--blocks", "single"]) == 0

    def test_check_support_routes(self, tmp_path):
        out = tmp_path / "r.json"
        levy = '{"atoms": [{"x": [1, 0, -1, 0], "mass": 1.0}]}'
        code = run(["check-support", "--levy", levy, "--blocks", "[[1,2],[3,4]]",
                    "--out", str(out)])
        assert code == 2
        ev = read_report(out)["verdict"]["evidence"]
        assert ev["via_pair_projections"] == ev["via_support_set"] is False

    def test_check_covfun_superadditivity(self):
        spec = '{"family": "fbm", "d": 1, "params": {"H": 0.3}}'
        assert run(["check-covfun", "--covfun", spec, "--times", "0,1,2,3"]) == 1
        spec = '{"family": "fbm", "d": 1, "params": {"H": 0.7}}'
        assert run(["check-covfun", "--covfun", spec, "--times", "0,1,2,3"]) == 0

    def test_check_covfun_mixed_derivative(self, tmp_path):
        out = tmp_path / "r.json"
        spec = '{"family": "fbm", "d": 1, "params": {"H": 0.3}}'
        code = run(["check-covfun", "--covfun", spec, "--times", "1,2",
                    "--mixed-derivative", "--step", "1e-3", "--out", str(out)])
        assert code == 1
        worst = read_report(out)["verdict"]["evidence"]["point"]
        assert worst["estimate"] == pytest.approx(-0.12, abs=1e-3)


class TestOracle:
    def test_anti_comonotone(self, tmp_path):
        out = tmp_path / "r.json"
        dist = '{"support": [[0, 1], [1, 0]], "probs": [0.5, 0.5]}'
        assert run(["oracle", "--dist", dist, "--out", str(out)]) == 1
        assert read_report(out)["verdict"]["evidence"]["covariance"] == -0.25

    def test_block_variant(self):
        dist = '{"support": [[0, 1], [1, 0]], "probs": [0.5, 0.5]}'
        assert run(["oracle", "--dist", dist, "--blocks", "single"]) == 0
        assert run(["oracle", "--dist", dist, "--blocks", "singleton"]) == 1


class TestMcAndReplay:
    def test_antithetic_violation_and_replay(self, tmp_path):
        out = tmp_path / "verdict.json"
        code = run(["mc-test", "--source", "brownian-antithetic", "--blocks", "singleton",
                    "--n", "20000", "--m", "50", "--seed", "42", "--out", str(out)])
        assert code == 1
        assert run(["replay", str(out)]) == 1
        # a fresh seed must reproduce the negative sign as well
        assert run(["replay", str(out), "--seed", "777"]) == 1

    def test_replay_of_pass_report_is_error(self, tmp_path):
        out = tmp_path / "verdict.json"
        code = run(["mc-test", "--source", "brownian-antithetic", "--blocks", "[[1,2],[3,4]]",
                    "--n", "20000", "--m", "50", "--seed", "42", "--out", str(out)])
        assert code == 0
        assert run(["replay", str(out)]) == 3


class TestSimulate:
    def test_csv_and_sidecar(self, tmp_path):
        out = tmp_path / "batch.csv"
        code = run(["simulate", "--source", "brownian-antithetic", "--count", "500",
                    "--seed", "7", "--out", str(out)])
        assert code == 0
        data = np.loadtxt(out, delimiter=",", skiprows=1)
        assert data.shape == (500, 4)
        meta = read_report(str(out) + ".meta.json")
        assert meta["seed"] == 7
        assert meta["count"] == 500

    def test_npy_output(self, tmp_path):
        out = tmp_path / "batch.npy"
        spec = '{"kind": "gaussian", "sigma": [[1, 0], [0, 1]]}'
        assert run(["simulate", "--source", spec, "--count", "100", "--out", str(out)]) == 0
        assert np.load(out).shape == (100, 2)

    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            run(["simulate", "--source", "brownian-antithetic", "--count", "200",
                 "--seed", "3", "--out", str(out)])
        assert a.read_bytes() == b.read_bytes()


class TestClt:
    MODEL = json.dumps(
        {"innovation_cov": [[1, -0.5], [-0.5, 1]], "thetas": [[[0.5, 0.25], [0.25, 0.5]]]}
    )

    def test_clt_report(self, tmp_path):
        out = tmp_path / "r.json"
        code = run(["clt", "--model", self.MODEL, "--n", "300", "--reps", "400",
                    "--seed", "42", "--out", str(out)])
        assert code == 0
        rep = read_report(out)["report"]
        assert rep["theoretical"][0][0] == pytest.approx(1.9375)

    def test_invariance_mode(self):
        code = run(["clt", "--model", self.MODEL, "--n", "300", "--reps", "400",
                    "--times", "0.5,1.0", "--seed", "42"])
        assert code == 0

    def test_uncertified_without_override(self):
        bad = json.dumps(
            {"innovation_cov": [[1, -0.5], [-0.5, 1]], "thetas": [[[0.5, 0], [0, 0.5]]]}
        )
        assert run(["clt", "--model", bad, "--n", "100", "--reps", "100"]) == 3
        assert run(["clt", "--model", bad, "--n", "100", "--reps", "100",
                    "--override-hypothesis"]) in (0, 1)


class TestReportDeterminism:
    def test_reports_identical_modulo_timestamp(self, tmp_path):
        out = tmp_path / "r.json"
        args = ["mc-test", "--source", "brownian-antithetic", "--blocks", "singleton",
                "--n", "20000", "--m", "50", "--seed", "42", "--out", str(out)]
        run(args)
        first = read_report(out)
        run(args)
        second = read_report(out)
        assert strip_timestamp(first) == strip_timestamp(second)

    def test_report_embeds_version_and_config(self, tmp_path):
        out = tmp_path / "r.json"
        run(["check-gaussian", "--sigma", ANTI2, "--blocks", "single", "--out", str(out)])
        rep = read_report(out)
        assert rep["tool"] == "blockassoc"
        assert "version" in rep
        assert rep["config"]["blocks"] == "single"
