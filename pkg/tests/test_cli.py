"""CLI wiring: artifacts, manifests, determinism and exit codes."""

import csv
import json

import pytest

from weylsums import cli


def _run(args):
    return cli.run(args)


def test_gauss_check_writes_report(tmp_path):
    out = tmp_path / "a"
    assert _run(["gauss-check", "--p", "13", "--out", str(out)]) == 0
    rep = json.loads((out / "gauss_check.json").read_text())
    assert rep[0]["passed"] is True
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "gauss-check"
    assert manifest["config"]["p"] == 13
    assert "timestamp" in manifest and "wall_time_s" in manifest and "version" in manifest


def test_moments_csv_value(tmp_path):
    out = tmp_path / "m"
    assert _run(["moments", "--d", "2", "--p", "3", "--nu", "2", "--out", str(out)]) == 0
    with (out / "moments.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    nu2 = [r for r in rows if r["nu"] == "2"][0]
    assert abs(float(nu2["moment_with_zero"]) - 135.0) < 1e-6 * 135


def test_results_byte_identical_across_runs(tmp_path):
    a, b = tmp_path / "r1", tmp_path / "r2"
    for out in (a, b):
        assert _run(["mr-scan", "--d", "2", "--count", "5", "--N-max", "4096",
                     "--seed", "11", "--out", str(out)]) == 0
    assert (a / "mr_scan.json").read_bytes() == (b / "mr_scan.json").read_bytes()

    c, d = tmp_path / "r3", tmp_path / "r4"
    for out in (c, d):
        assert _run(["weyl-trace", "--d", "2", "--seed", "7", "--N-max", "2048",
                     "--out", str(out)]) == 0
    assert (c / "weyl_trace.csv").read_bytes() == (d / "weyl_trace.csv").read_bytes()


def test_weyl_trace_exact_rational_point(tmp_path):
    out = tmp_path / "t"
    assert _run(["weyl-trace", "--x", "0/5,1/5", "--N-max", "100", "--out", str(out)]) == 0
    with (out / "weyl_trace.csv").open() as fh:
        rows = {int(r["N"]): float(r["magnitude"]) for r in csv.DictReader(fh)}
    assert abs(rows[10] - 2 * 5**0.5) < 1e-9


def test_exit_code_invalid_config(tmp_path):
    assert _run(["moments", "--d", "2", "--p", "1024", "--out", str(tmp_path / "x")]) == 2
    assert _run(["amplify", "--d", "2", "--p", "251", "--tau", "3",
                 "--out", str(tmp_path / "y")]) == 2


def test_unknown_flag_rejected():
    with pytest.raises(SystemExit) as exc:
        cli.run(["gauss-check", "--p", "13", "--no-such-flag", "1"])
    assert exc.value.code == 2


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        cli.run(["--version"])
    assert exc.value.code == 0


def test_exit_code_resource_limit(tmp_path):
    assert _run(["moments", "--d", "3", "--p", "251", "--cap", "1000000",
                 "--out", str(tmp_path / "z")]) == 3


def test_amplify_artifacts(tmp_path):
    out = tmp_path / "amp"
    assert _run(["amplify", "--d", "2", "--p", "257", "--tau", "3", "--seed", "3",
                 "--out", str(out)]) == 0
    reports = json.loads((out / "amplify.json").read_text())
    assert len(reports) == 4 and all(r["pass"] for r in reports)


def test_amplify_mono(tmp_path):
    out = tmp_path / "mono"
    assert _run(["amplify-mono", "--d", "2", "--p", "5", "--tau", "12", "--out", str(out)]) == 0
    rep = json.loads((out / "amplify_mono.json").read_text())
    assert rep["pass"] is True


def test_cantor_build_artifacts(tmp_path):
    out = tmp_path / "cb"
    assert _run(["cantor-build", "--d", "3", "--tau", "4", "--primes", "31,127",
                 "--depth", "2", "--out", str(out)]) == 0
    summary = json.loads((out / "cantor_summary.json").read_text())
    assert summary["certificates_pass"] is True
    assert summary["box_count"] == 64
    lines = (out / "cantor_boxes.jsonl").read_text().strip().split("\n")
    assert len(lines) == 64


def test_discrepancy_csv(tmp_path):
    out = tmp_path / "disc"
    assert _run(["discrepancy", "--d", "1", "--x", "1/2", "--N-max", "4",
                 "--out", str(out)]) == 0
    with (out / "discrepancy.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert [r["N"] for r in rows] == ["1", "2", "3", "4"]
    assert float(rows[3]["D_N"]) == 2.0


def test_koksma_check_cli(tmp_path):
    out = tmp_path / "kk"
    assert _run(["koksma-check", "--d", "2", "--count", "10", "--N-max", "200",
                 "--seed", "1", "--out", str(out)]) == 0
    rep = json.loads((out / "koksma_check.json").read_text())
    assert rep["passed"] is True


def test_enumerate_lp_cli(tmp_path):
    out = tmp_path / "lp"
    assert _run(["enumerate-lp", "--d", "2", "--p", "5", "--out", str(out)]) == 0
    rep = json.loads((out / "enumerate_lp.json").read_text())
    assert rep["count"] == 20


def test_orbit_count_cli(tmp_path):
    out = tmp_path / "oc"
    assert _run(["orbit-count", "--p", "101", "--a", "1,1", "--side", "60",
                 "--out", str(out)]) == 0
    rep = json.loads((out / "orbit_count.json").read_text())
    assert rep["count"] == 33


def test_table_cache_via_cli(tmp_path):
    out = tmp_path / "cache-run"
    for _ in range(2):
        assert _run(["moments", "--d", "2", "--p", "13", "--nu", "1", "--cache",
                     "--out", str(out)]) == 0
    assert (out / "cache" / "table_d2_p13.wslt").exists()
    assert (out / "cache" / "table_d2_p13.wslt.sha256").exists()


def test_pattern_demo(tmp_path):
    out = tmp_path / "pat"
    assert _run(["pattern-demo", "--d", "2", "--cells", "3", "--c", "1/10",
                 "--out", str(out)]) == 0
    lines = (out / "pattern.jsonl").read_text().strip().split("\n")
    assert len(lines) == 9


def test_measure_estimate_cli(tmp_path):
    out = tmp_path / "me"
    assert _run(["measure-estimate", "--d", "2", "--alpha", "0.4", "--i", "8",
                 "--samples", "1000", "--seed", "2", "--out", str(out)]) == 0
    rep = json.loads((out / "measure_estimate.json").read_text())
    assert 0.0 <= rep["estimate"] <= 1.0


def test_sigma_and_scans_cli(tmp_path):
    out = tmp_path / "sig"
    assert _run(["sigma-scan", "--x", "0/1,0/1", "--N-max", "1024", "--out", str(out)]) == 0
    rep = json.loads((out / "sigma_scan.json").read_text())
    assert abs(rep["sigma_estimate"] - 1.0) < 1e-6
    out2 = tmp_path / "exc"
    assert _run(["exceptional-scan", "--x", "0/5,1/5", "--alpha", "0.6",
                 "--N-max", "100", "--out", str(out2)]) == 0
    rep = json.loads((out2 / "exceptional_scan.json").read_text())
    assert 10 in rep["qualifying_N"]
    out3 = tmp_path / "dsc"
    assert _run(["discrepancy-scan", "--x", "0/1,0/1", "--alpha", "0.9",
                 "--N-max", "32", "--out", str(out3)]) == 0
    rep = json.loads((out3 / "discrepancy_scan.json").read_text())
    assert rep["qualifying_N"] == list(range(1, 33))


def test_box_density_cli(tmp_path):
    out = tmp_path / "bd"
    assert _run(["box-density", "--d", "3", "--p", "31", "--out", str(out)]) == 0
    rep = json.loads((out / "box_density.json").read_text())
    assert rep["minimal_side"] >= 1
