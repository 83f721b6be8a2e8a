"""CLI dispatch, config round-trips, artifacts, exit codes."""

import hashlib
import json
from pathlib import Path

import pytest

from spsat import harness
from spsat.errors import (ContradictionError, DimacsParseError,
                          InvalidParametersError, TreeBudgetError)
from spsat.harness import (EXIT_BUDGET, EXIT_CONTRADICTION,
                           EXIT_INVALID_PARAMETERS, EXIT_NON_CONVERGENCE,
                           EXIT_OK, EXIT_PARSE_ERROR, ExperimentConfig,
                           exit_code_for, format_csv, main)


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv(harness.OUTDIR_ENV, str(tmp_path))
    return tmp_path


def test_config_round_trip():
    cfg = ExperimentConfig(subcommand="sp", n_vars=100, alpha=3.0, seed=7,
                           seeds=(1, 2, 3), epsilon=1e-4, out="x")
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


def test_config_rejects_unknown_keys():
    with pytest.raises(InvalidParametersError):
        ExperimentConfig.from_dict({"subcommand": "sp", "bogus": 1})


def test_exit_code_mapping():
    assert exit_code_for(InvalidParametersError("x")) == EXIT_INVALID_PARAMETERS
    assert exit_code_for(ContradictionError("x")) == EXIT_CONTRADICTION
    assert exit_code_for(DimacsParseError("x", 3)) == EXIT_PARSE_ERROR
    assert exit_code_for(TreeBudgetError("x", 10, 5)) == EXIT_BUDGET
    assert exit_code_for(RuntimeError("x")) == 1


def test_format_csv_stable():
    rows = [{"a": 1, "b": 0.5}, {"a": 2, "b": 1e-300}]
    text = format_csv(rows, ["a", "b"])
    assert text == "a,b\n1,0.5\n2,1e-300\n"
    with pytest.raises(InvalidParametersError):
        harness.emit_plot_data([], ["a"], "/tmp/never.csv")


def test_config_file_defaults_and_flag_precedence(outdir):
    cfg_file = outdir / "defaults.cfg"
    cfg_file.write_text("# defaults\nalpha=2.5\nseed=9\n")
    parsed = harness.config_from_args(
        ["--config", str(cfg_file), "gen", "--n", "30", "--seed", "4",
         "--out", "g"])
    assert parsed.alpha == 2.5      # from file
    assert parsed.seed == 4         # flag wins
    assert parsed.n_vars == 30


def test_gen_writes_artifacts_and_manifest(outdir):
    assert main(["gen", "--n", "40", "--alpha", "2.0", "--seed", "3",
                 "--out", "inst"]) == EXIT_OK
    cnf = (outdir / "inst.cnf").read_text()
    assert cnf.startswith("p cnf 40 80\n")
    summary = json.loads((outdir / "inst_summary.json").read_text())
    assert summary["n_clauses"] == 80
    manifest = json.loads((outdir / "inst_manifest.json").read_text())
    assert manifest["version"]
    assert manifest["config"]["subcommand"] == "gen"
    digest = hashlib.sha256(cnf.encode()).hexdigest()
    assert manifest["artifacts"]["inst.cnf"] == digest


def test_rerun_reproduces_artifacts_byte_for_byte(outdir):
    args = ["sp", "--n", "300", "--alpha", "3.0", "--seed", "5",
            "--epsilon", "1e-6", "--max-sweeps", "200"]
    assert main(args + ["--out", "a"]) == EXIT_OK
    assert main(args + ["--out", "b"]) == EXIT_OK
    for suffix in ("_report.json", "_residuals.csv", "_surveys.jsonl"):
        assert (outdir / f"a{suffix}").read_bytes() == \
            (outdir / f"b{suffix}").read_bytes()


def test_sp_trivial_run(outdir):
    code = main(["sp", "--n", "2000", "--alpha", "3.0", "--seed", "7",
                 "--epsilon", "1e-7", "--max-sweeps", "200",
                 "--trivial-tol", "1e-4", "--out", "sp3"])
    assert code == EXIT_OK
    report = json.loads((outdir / "sp3_report.json").read_text())
    assert report["classification"] == "trivial"
    assert report["max_polarization"] < 1e-4


def test_sp_non_convergent_exit_code(outdir):
    code = main(["sp", "--n", "2000", "--alpha", "4.5", "--seed", "1",
                 "--schedule", "synchronous", "--epsilon", "1e-3",
                 "--max-sweeps", "30", "--out", "sp45"])
    assert code == EXIT_NON_CONVERGENCE
    report = json.loads((outdir / "sp45_report.json").read_text())
    assert report["classification"] == "non-convergent"


def test_sp_invalid_epsilon_exit_code(outdir, capsys):
    code = main(["sp", "--n", "100", "--alpha", "3.0", "--epsilon", "-1",
                 "--out", "bad"])
    assert code == EXIT_INVALID_PARAMETERS
    assert "error:" in capsys.readouterr().err


def test_bp_run_with_entropy(outdir):
    code = main(["bp", "--n", "200", "--alpha", "1.0", "--seed", "2",
                 "--epsilon", "1e-9", "--max-sweeps", "300",
                 "--entropy", "--out", "bp1"])
    assert code == EXIT_OK
    report = json.loads((outdir / "bp1_report.json").read_text())
    assert report["converged"] is True
    assert report["entropy"] > 0
    lines = (outdir / "bp1_messages.jsonl").read_text().strip().split("\n")
    assert len(lines) == 600


def test_bp_parse_error_exit_code(outdir):
    bad = outdir / "bad.cnf"
    bad.write_text("p cnf x 1\n1 2 3 0\n")
    code = main(["bp", "--dimacs", str(bad), "--out", "bpbad"])
    assert code == EXIT_PARSE_ERROR


def test_gen_missing_parameters(outdir):
    assert main(["gen", "--out", "nothing"]) == EXIT_INVALID_PARAMETERS


def test_unroll_budget_exit_code(outdir):
    code = main(["unroll", "--n", "5000", "--alpha", "4.0", "--seed", "1",
                 "--k", "6", "--budget", "1000", "--out", "toobig"])
    assert code == EXIT_BUDGET


def test_unroll_and_probe(outdir):
    code = main(["unroll", "--n", "200", "--alpha", "2.0", "--seed", "3",
                 "--root", "1", "--k", "2", "--out", "tr"])
    assert code == EXIT_OK
    lines = (outdir / "tr_tree.jsonl").read_text().strip().split("\n")
    assert json.loads(lines[0])["mapped_var"] == 1
    code = main(["probe", "--n", "500", "--alpha", "3.5", "--seed", "3",
                 "--root", "0", "--k", "2", "--boundaries", "4",
                 "--out", "pr"])
    assert code == EXIT_OK
    csv = (outdir / "pr_dispersion.csv").read_text().splitlines()
    assert csv[0] == "k,mean_dist,max_dist,n_boundaries"
    assert len(csv) == 3


def test_popdyn_trajectory_csv(outdir):
    code = main(["popdyn", "--alpha", "4.2", "--L", "500", "--t-max", "20",
                 "--seed", "4", "--out", "pd"])
    assert code == EXIT_OK
    lines = (outdir / "pd_trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,D,mean_s_I,frozen_fraction,Sigma_per_N"
    assert len(lines) == 21


def test_lyapunov_artifacts(outdir):
    code = main(["lyapunov", "--alpha", "4.0", "--L", "2000", "--t-max", "60",
                 "--equilibration", "40", "--seed", "2", "--out", "ly"])
    assert code == EXIT_OK
    rec = json.loads((outdir / "ly_lambda.json").read_text())
    assert rec["alpha"] == 4.0
    assert rec["lambda"] > 0
    assert (outdir / "ly_distance.csv").exists()


def test_scan_artifacts_and_thresholds_schema(outdir):
    code = main(["scan", "--alpha-from", "3.5", "--alpha-to", "3.7",
                 "--step", "0.2", "--L", "1000", "--t-max", "30",
                 "--equilibration", "40", "--sigma-samples", "5000",
                 "--seeds", "0,1", "--out", "sc"])
    assert code == EXIT_OK
    csv = (outdir / "sc_scan.csv").read_text().splitlines()
    assert csv[0] == "alpha,lambda,lambda_ci,Sigma_per_N,Sigma_se,frozen_fraction"
    assert len(csv) == 3
    thresholds = json.loads((outdir / "sc_thresholds.json").read_text())
    assert set(thresholds) == {"alpha_L", "alpha_star", "alpha_U"}
    assert thresholds["alpha_L"] is None


def test_module_entry_point():
    import subprocess
    import sys
    out = subprocess.run([sys.executable, "-m", "spsat", "gen", "--n", "12",
                          "--alpha", "1.0", "--out", "m"],
                         capture_output=True, cwd="/tmp")
    assert out.returncode == 0
    assert Path("/tmp/m.cnf").exists()
