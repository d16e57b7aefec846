"""Certificate pipelines, report serialization, and the command line."""

import json
import math

import pytest

from cechcert.cli import main
from cechcert.errors import DomainError
from cechcert.report import CertificateReport, emit_report
from cechcert.scenarios import (
    ScenarioConfig,
    hessian_scan_rows,
    run_dim2,
    run_dimn,
    torus_rank_table,
)


def _fast_cfg(**kw) -> ScenarioConfig:
    base = dict(samples=300, run_connectivity=False)
    base.update(kw)
    return ScenarioConfig(**base)


@pytest.fixture(scope="module")
def dim2_report():
    return run_dim2(_fast_cfg())


@pytest.fixture(scope="module")
def dimn_report():
    return run_dimn(_fast_cfg())


def test_dim2_passes(dim2_report):
    assert dim2_report.overall_pass
    names = [c.name for c in dim2_report.checks]
    for want in (
        "overlap-two-components",
        "h1-rank-and-generator",
        "flat-obstruction",
        "periodicity",
        "tube-transport",
        "torus-inside-tube",
    ):
        assert want in names


def test_dim2_debug_cocycle_fails():
    cfg = _fast_cfg(debug_cocycle={((0, 1), 0): 1, ((0, 1), 1): 1})
    rep = run_dim2(cfg)
    assert not rep.overall_pass
    status = {c.name: c.status for c in rep.checks}
    assert status["h1-rank-and-generator"] == "fail"


def test_dim2_debug_scale_fails():
    rep = run_dim2(_fast_cfg(debug_scale="full"))
    assert not rep.overall_pass
    status = {c.name: c.status for c in rep.checks}
    assert status["flat-obstruction"] == "fail"


def test_dimn_passes(dimn_report):
    assert dimn_report.overall_pass
    names = [c.name for c in dimn_report.checks]
    for want in (
        "tube-bounded",
        "levi-lower-bound",
        "contraction-identity",
        "hessian-pd-at-p",
        "negative-control-eps-n",
        "up-ball",
        "tube-not-convex",
        "connectivity",
        "clutching-bundle",
        "overlap-containment-and-glue",
        "glued-class-obstruction",
    ):
        assert want in names
    assert "lcex" in dimn_report.artifacts


def test_dimn_trusted_checks_do_not_hide_failures(dimn_report):
    trusted = [c for c in dimn_report.checks if c.status == "trusted"]
    assert trusted  # connectivity skip plus the analytic facts
    assert all(c.status in ("pass", "trusted") for c in dimn_report.checks)


def test_dimn_eps_at_threshold_fails():
    rep = run_dimn(_fast_cfg(epsilon=2.5))
    assert not rep.overall_pass
    status = {c.name: c.status for c in rep.checks}
    assert status["up-ball"] == "fail"
    assert status["hessian-pd-at-p"] == "fail"


def test_dimn_rejects_bad_config():
    with pytest.raises(DomainError):
        run_dimn(_fast_cfg(epsilon=-1.0))
    with pytest.raises(DomainError):
        run_dimn(_fast_cfg(n=1))


def test_report_json_roundtrip(dim2_report):
    payload = json.loads(dim2_report.to_json())
    assert payload["schema_version"] == 1
    assert payload["scenario"] == "dim2"
    assert payload["overall"] == "pass"
    assert {c["name"] for c in payload["checks"]} == {c.name for c in dim2_report.checks}


def test_report_deterministic_bytes():
    a = run_dim2(_fast_cfg()).to_json()
    b = run_dim2(_fast_cfg()).to_json()
    assert a == b


def test_report_duplicate_name_rejected():
    rep = CertificateReport("x", {})
    rep.add("a", True)
    with pytest.raises(ValueError):
        rep.add("a", False)
    with pytest.raises(ValueError):
        rep.add_trusted("a", "note")


def test_emit_report(tmp_path, dim2_report):
    path = tmp_path / "r.json"
    emit_report(dim2_report, str(path), "json")
    assert json.loads(path.read_text())["scenario"] == "dim2"
    emit_report(dim2_report, str(tmp_path / "r.txt"), "text")
    assert "overall" in (tmp_path / "r.txt").read_text()
    with pytest.raises(OSError):
        emit_report(dim2_report, str(tmp_path / "nope" / "r.json"), "json")
    with pytest.raises(ValueError):
        emit_report(dim2_report, str(path), "yaml")


def test_torus_rank_table():
    rows = torus_rank_table(2)
    assert [r["rank"] for r in rows] == [1, 2, 1]
    assert all(r["rank"] == r["expected"] for r in rows)
    assert all(r["torsion"] == [] for r in rows)


def test_hessian_scan_rows():
    rows = hessian_scan_rows(0.5, 3.5, 100)
    assert len(rows) == 100
    mid = [r for r in rows if 1.05 < r["modulus"] < math.e - 0.05]
    assert mid and all(r["definite"] for r in mid)
    tails = [r for r in rows if r["modulus"] < 0.95 or r["modulus"] > math.e + 0.05]
    assert tails and not any(r["definite"] for r in tails)


def test_cli_dim2(tmp_path):
    out = tmp_path / "dim2.json"
    code = main(["dim2", "--samples", "300", "--out", str(out)])
    assert code == 0
    assert json.loads(out.read_text())["overall"] == "pass"


def test_cli_dimn_failure_exit(tmp_path):
    out = tmp_path / "dimn.json"
    code = main(["dimn", "--epsilon", "2.5", "--samples", "200", "--out", str(out)])
    assert code == 1
    assert json.loads(out.read_text())["overall"] == "fail"


def test_cli_config_error_exit(tmp_path):
    assert main(["dimn", "--epsilon", "-1", "--out", str(tmp_path / "x.json")]) == 2
    assert main(["dim2", "--samples", "100", "--out", str(tmp_path / "no" / "x.json")]) == 2


def test_cli_torus_table(tmp_path):
    out = tmp_path / "ranks.json"
    code = main(["cohomology-torus", "--n", "2", "--out", str(out)])
    assert code == 0
    rows = json.loads(out.read_text())
    assert [r["rank"] for r in rows] == [1, 2, 1]


def test_cli_hessian_scan(tmp_path):
    out = tmp_path / "scan.csv"
    code = main(["hessian-scan", "--count", "50", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "modulus,trace,det,definite"
    assert len(lines) == 51


def test_cli_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("CECHCERT_OUT", str(tmp_path))
    code = main(["dim2", "--samples", "200"])
    assert code == 0
    assert (tmp_path / "dim2_report.json").exists()
