import json

import numpy as np
import pytest

from boundary_lab.cli import main
from boundary_lab.functionals import estimate_functional
from boundary_lab.model import HolderClass, power_functional
from boundary_lab.simulate import read_sample_csv


def run(*argv):
    return main(list(argv))


class TestSimulate:
    def test_writes_csv_and_sidecar(self, tmp_path):
        out = tmp_path / "sample.csv"
        code = run(
            "simulate", "--beta", "1", "--radius", "1", "--n", "50",
            "--g", "const:0", "--seed", "3", "--out", str(out),
        )
        assert code == 0
        assert out.read_text().startswith("x,y\n")
        meta = json.loads((tmp_path / "sample.csv.json").read_text())
        assert meta["n"] == 50 and meta["boundary"] == "const:0"
        assert "config" in meta

    def test_invalid_beta_is_usage_error(self, tmp_path):
        code = run(
            "simulate", "--beta", "2", "--radius", "1", "--n", "10",
            "--seed", "1", "--out", str(tmp_path / "s.csv"),
        )
        assert code == 1

    def test_unknown_flag_is_usage_error(self, capsys):
        assert run("simulate", "--frobnicate", "1") == 1
        assert "usage" in capsys.readouterr().err


class TestEstimateRoundTrip:
    def test_matches_in_memory_bitwise(self, tmp_path, capsys):
        out = tmp_path / "sample.csv"
        assert run(
            "simulate", "--beta", "1", "--radius", "1", "--n", "80",
            "--g", "const:1", "--seed", "11", "--out", str(out),
        ) == 0
        assert run(
            "estimate", "--in", str(out), "--beta", "1", "--radius", "1",
            "--functional", "power:1",
        ) == 0
        record = json.loads(capsys.readouterr().out)
        sample, _ = read_sample_csv(out)
        hol = HolderClass(beta=1.0, radius=1.0)
        expected = estimate_functional(sample, hol, power_functional(1))
        assert record["value"] == expected.value
        assert record["integral_term"] == expected.integral_term
        assert record["sum_term"] == expected.sum_term
        assert record["count_on_envelope"] == expected.count_on_envelope

    def test_unknown_functional(self, tmp_path):
        out = tmp_path / "sample.csv"
        run("simulate", "--beta", "1", "--radius", "1", "--n", "10", "--seed", "1", "--out", str(out))
        assert run("estimate", "--in", str(out), "--beta", "1", "--radius", "1", "--functional", "entropy") == 1


class TestEnvelopeCommand:
    def test_writes_grid(self, tmp_path):
        sample = tmp_path / "sample.csv"
        run("simulate", "--beta", "1", "--radius", "1", "--n", "40", "--seed", "2", "--out", str(sample))
        env = tmp_path / "env.csv"
        assert run(
            "envelope", "--in", str(sample), "--beta", "1", "--radius", "1",
            "--grid", "64", "--out", str(env),
        ) == 0
        lines = env.read_text().splitlines()
        assert lines[0] == "x,ghat"
        assert len(lines) == 65


class TestMcAndRates:
    def test_mc_deterministic_and_rates_gate(self, tmp_path, capsys):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        for out in (a, b):
            assert run(
                "mc", "--estimator", "fp", "--p", "1", "--beta", "1", "--radius", "1",
                "--g", "const:1", "--ns", "8,16,32,64", "--reps", "150",
                "--seed", "4", "--grid", "512", "--out", str(out),
            ) == 0
        assert a.read_bytes() == b.read_bytes()
        # generous tolerance: slope of a real run sits near -0.75
        assert run("rates", "--in", str(a), "--target-exponent", "0.75", "--tol", "0.5") == 0
        fit = json.loads(capsys.readouterr().out)
        assert fit["within_tolerance"] is True
        # an impossible target fails the gate with exit 2
        assert run("rates", "--in", str(a), "--target-exponent", "3.0", "--tol", "0.01") == 2

    def test_threads_flag_matches_serial(self, tmp_path):
        a = tmp_path / "serial.csv"
        b = tmp_path / "threads.csv"
        common = [
            "mc", "--estimator", "fp", "--p", "1", "--beta", "1", "--radius", "1",
            "--g", "const:1", "--ns", "8,16", "--reps", "100", "--seed", "4", "--grid", "256",
        ]
        assert run(*common, "--out", str(a)) == 0
        assert run(*common, "--threads", "2", "--out", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()


class TestTestCommand:
    def test_decision_csv(self, tmp_path):
        out = tmp_path / "test.csv"
        assert run(
            "test", "--p", "1", "--beta", "1", "--radius", "1", "--n", "64",
            "--rn", "0.15", "--reps", "5", "--seed", "6", "--grid", "512", "--out", str(out),
        ) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "hypothesis,rep,statistic,decision"
        assert any(line.startswith("null,") for line in lines[1:])
        assert any(line.startswith("alt0,") for line in lines[1:])
        meta = json.loads((tmp_path / "test.csv.json").read_text())
        assert "alternatives" in meta


class TestLowerboundCommand:
    def test_certificate_json(self, capsys):
        assert run(
            "lowerbound", "--beta", "1", "--radius", "1", "--n", "16",
            "--m", "4", "--c", "0.25", "--weights", "uniform", "--reps", "200", "--seed", "8",
        ) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["exact_value"] <= record["lemma_bound"]
        assert record["m"] == 4

    def test_r_target_sizing(self, capsys):
        assert run(
            "lowerbound", "--beta", "1", "--radius", "1", "--n", "1024",
            "--r-target", str(0.2 * 1024 ** (-0.75)), "--p", "1", "--seed", "8",
        ) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["m"] == 94
        assert record["lemma_bound"] < 0.05

    def test_m_and_r_target_exclusive(self):
        assert run(
            "lowerbound", "--beta", "1", "--radius", "1", "--n", "16",
            "--m", "4", "--r-target", "0.01",
        ) == 1


class TestCheckCommand:
    def test_interp_passes_on_certified_corpus(self, tmp_path):
        out = tmp_path / "interp.csv"
        code = run(
            "check", "interp", "--corpus", "10", "--beta", "0.5", "--radius", "1",
            "--p", "2", "--seed", "1", "--out", str(out),
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "case,lhs,rhs,holds"
        assert len(lines) == 11
        assert all(line.endswith(",1") for line in lines[1:])
