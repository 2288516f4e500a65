"""Command-line surface: exit codes, file formats, round trips."""

import json

import pytest

from cvarscale import load_instance, save_instance, validate
from cvarscale.cli import main


@pytest.fixture()
def two_scenario_file(tmp_path, two_scenario):
    path = tmp_path / "two.json"
    save_instance(two_scenario, path)
    return str(path)


@pytest.fixture()
def line_four_file(tmp_path, line_four):
    path = tmp_path / "line.json"
    save_instance(line_four, path)
    return str(path)


class TestValidateCommand:
    def test_ok(self, two_scenario_file):
        assert main(["validate", two_scenario_file]) == 0

    def test_missing_file(self, tmp_path):
        assert main(["validate", str(tmp_path / "nope.json")]) == 2

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["validate", str(path)]) == 2


class TestSolveCommand:
    def test_plain(self, two_scenario_file, tmp_path, capsys):
        out = tmp_path / "sol.json"
        assert main(["solve", two_scenario_file, "--method", "cvar", "-o", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["objective"] == pytest.approx(2.0)
        assert doc["status"] == "optimal"
        assert set(doc) >= {"objective", "x", "beta", "s", "alpha", "status",
                            "violation_prob"}

    def test_infeasible_plain_exits_one(self, line_four_file):
        assert main(["solve", line_four_file, "--method", "cvar"]) == 1

    def test_scaled_needs_alpha_file(self, two_scenario_file):
        assert main(["solve", two_scenario_file, "--method", "scaled"]) == 2

    def test_scaled(self, two_scenario_file, tmp_path):
        alpha = tmp_path / "alpha.json"
        alpha.write_text("[1.0, 6.0]")
        out = tmp_path / "sol.json"
        rc = main(["solve", two_scenario_file, "--method", "scaled",
                   "--alpha-file", str(alpha), "-o", str(out)])
        assert rc == 0
        assert json.loads(out.read_text())["objective"] == pytest.approx(1.5)

    def test_iterative_with_trace(self, two_scenario_file, tmp_path):
        out, trace = tmp_path / "sol.json", tmp_path / "trace.json"
        rc = main(["solve", two_scenario_file, "--method", "alg1",
                   "-o", str(out), "--trace-file", str(trace)])
        assert rc == 0
        tdoc = json.loads(trace.read_text())
        assert tdoc["records"]
        assert tdoc["incumbent"]["objective"] == pytest.approx(
            min(r["objective"] for r in tdoc["records"])
        )

    def test_exact(self, two_scenario_file, tmp_path):
        out = tmp_path / "sol.json"
        assert main(["solve", two_scenario_file, "--method", "exact", "-o", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["objective"] == pytest.approx(1.0)
        assert doc["satisfied_set"] == [2]

    def test_alsox_init_for_iterative(self, line_four_file, tmp_path):
        # plain start is infeasible here; an explicit point must be accepted
        init = tmp_path / "x0.json"
        init.write_text(json.dumps({"x": [0.0]}))
        rc = main(["solve", line_four_file, "--method", "alg1",
                   "--init-file", str(init), "-o", str(tmp_path / "sol.json")])
        assert rc == 0
        doc = json.loads((tmp_path / "sol.json").read_text())
        assert doc["objective"] == pytest.approx(0.0, abs=1e-7)


class TestSweepCommand:
    def test_reference_curve(self, two_scenario_file, tmp_path):
        out = tmp_path / "sweep.csv"
        rc = main(["sweep", two_scenario_file, "--scenario", "2",
                   "--grid", "1,2,6,50", "-o", str(out)])
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "alpha,objective"
        values = [float(line.split(",")[1]) for line in lines[1:]]
        assert values == pytest.approx([2.0, 2.0, 1.5, 1.06], abs=1e-8)

    def test_single_point_matches_plain(self, two_scenario_file, tmp_path, capsys):
        rc = main(["sweep", two_scenario_file, "--scenario", "2", "--grid", "1"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert float(lines[1].split(",")[1]) == pytest.approx(2.0)

    def test_scenario_index_checked(self, two_scenario_file):
        assert main(["sweep", two_scenario_file, "--scenario", "3", "--grid", "1"]) == 2


class TestCertifyCommand:
    def test_certificate_found(self, two_scenario_file, tmp_path):
        out = tmp_path / "cert.json"
        assert main(["certify", two_scenario_file, "-o", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["x"][0] > 1.0

    def test_no_certificate(self, tmp_path, line_four_zero_offset):
        # pin the domain at the origin: the zero-offset row can never be strict
        from dataclasses import replace
        from cvarscale import Domain

        pinned = replace(line_four_zero_offset, domain=Domain.box([0.0], [0.0]))
        path = tmp_path / "pinned.json"
        save_instance(pinned, path)
        assert main(["certify", str(path)]) == 1


class TestGenerateAndBench:
    def test_generate_round_trip(self, tmp_path):
        out = tmp_path / "inst.json"
        rc = main(["generate", "--family", "portfolio", "--n", "8", "--N", "20",
                   "--eps", "0.200333", "--seed", "5", "--out", str(out)])
        assert rc == 0
        inst = load_instance(out)
        validate(inst)
        assert main(["validate", str(out)]) == 0
        assert main(["solve", str(out), "--method", "cvar",
                     "-o", str(tmp_path / "sol.json")]) in (0, 1)

    def test_bench_rows(self, tmp_path):
        out = tmp_path / "report.csv"
        rc = main(["bench", "--family", "portfolio", "--n", "5", "--N", "10",
                   "--eps-list", "0.300333", "--seeds", "1,2",
                   "--budget-fraction", "0.6",
                   "--methods", "cvar,alg1", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 5  # header + 2 seeds x 2 methods
        assert lines[0].startswith("instance,eps,method")

    def test_bench_on_instance_file(self, two_scenario_file, tmp_path):
        out = tmp_path / "report.csv"
        rc = main(["bench", "--instance", two_scenario_file,
                   "--methods", "cvar,exact", "--out", str(out)])
        assert rc == 0
        assert len(out.read_text().strip().splitlines()) == 3

    def test_bench_rejects_unknown_method(self, two_scenario_file):
        assert main(["bench", "--instance", two_scenario_file,
                     "--methods", "cvar,magic"]) == 2
