import json

import pytest

from fermitree.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_empty_suite_is_a_usage_error(capsys):
    code, _, err = run(capsys, "verify", "--suite", "")
    assert code == 2 and "no suite" in err
    code, _, _ = run(capsys, "verify")
    assert code == 2


def test_unknown_suite(capsys):
    code, _, err = run(capsys, "verify", "--suite", "nope")
    assert code == 2 and "unknown suite" in err


def test_verify_pfaffian(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "pfaffian", "--seed", "7")
    rows = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and len(rows) == 100 and all(r["pass"] for r in rows)


def test_verify_recursion_small(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "recursion", "--m", "2", "--tol", "1e-10", "--configs", "3")
    rows = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and rows and all(r["pass"] for r in rows)


def test_verify_writes_summary(tmp_path, capsys):
    out = tmp_path / "ibp.jsonl"
    code, _, _ = run(capsys, "verify", "--suite", "ibp,gram", "--out", str(out))
    assert code == 0
    summary = (tmp_path / "ibp.jsonl.summary.csv").read_text().splitlines()
    assert summary[0] == "suite,instances,failures"
    assert sorted(summary[1:]) == ["gram,200,0", "ibp,100,0"]


def test_bounds_paths(capsys):
    code, out, _ = run(capsys, "bounds", "--m", "3", "--legs", "4", "--branches", "0", "--nspin", "1")
    rows = [json.loads(line) for line in out.splitlines()]
    assert code == 0
    tables = [r for r in rows if r.get("suite") == "bounds"]
    assert tables and all(r["status"] != "violation" for r in tables)
    assert all(r["theorem1"] >= r["amplitude"] for r in tables if r.get("amplitude") is not None)
    assert any(r.get("suite") == "corollary" for r in rows)


def test_bounds_caterpillar_has_theorem2(capsys):
    code, out, _ = run(capsys, "bounds", "--caterpillar", "--m", "1", "--legs", "2,3", "--n-max", "4",
                       "--format", "csv", "--nspin", "1")
    lines = out.splitlines()
    header = lines[0].split(",")
    assert code == 0 and "theorem2" in header
    col = header.index("theorem2")
    assert all(line.split(",")[col] for line in lines[1:])


def test_scaling_synthetic(capsys):
    code, out, _ = run(capsys, "scaling", "--synthetic")
    data = json.loads(out)
    assert code == 0
    assert data["slopes"]["sup_hat"] == pytest.approx(1) and data["slopes"]["l1_hat"] == pytest.approx(-1)


def test_scaling_rejects_short_range(capsys):
    code, _, err = run(capsys, "scaling", "--j-min", "2", "--j-max", "3")
    assert code == 2 and "three scales" in err


def test_scaling_names_required_lattice(capsys):
    code, _, err = run(capsys, "scaling", "--lattice", "2")
    assert code == 2 and "need lattice" in err


def test_scaling_csv(capsys):
    code, out, _ = run(capsys, "scaling", "--format", "csv", "--j-max", "4")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "j,sup_hat,l1_hat,l1_pos,c_constant" and len(lines) == 4
