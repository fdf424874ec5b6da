import json
import numbers

import pytest

from orbitlf.cli import run
from orbitlf.report import strip_timing


def invoke(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_orbits_mod9(capsys):
    code, out, _ = invoke(capsys, "orbits", "--p", "3", "--k", "2")
    assert code == 0
    report = json.loads(out)
    assert report["schema"] == "orbitlf-report/1"
    assert report["result"]["count"] == 2
    assert [o["size"] for o in report["result"]["orbits"]] == [2, 2]


def test_thin_orbits_listing(capsys):
    code, out, _ = invoke(capsys, "orbits", "--p", "3", "--k", "5", "--thin", "1")
    result = json.loads(out)["result"]
    assert code == 0 and result["partition_ok"]
    assert {o["size"] for o in result["orbits"]} == {3}


@pytest.mark.parametrize(
    "argv",
    [
        ["orbits", "--p", "4", "--k", "2"],
        ["orbits", "--p", "3", "--k", "2", "--c", "3"],
        ["orbits", "--p", "3"],
        ["moment", "--p", "3", "--k", "4", "--eta1", "9", "--eta2", "9"],
        ["moment", "--p", "3", "--k", "4", "--eta1", "9", "--eta2", "27", "--m1", "3"],
        ["mollify", "--p", "3", "--k", "4", "--eta1", "9", "--eta2", "27", "--ell", "3,4"],
        ["congruence", "--p", "5", "--alpha", "3", "--A", "10", "--B", "10", "--probe-alphas", "2", "--delta", "0.5"],
        ["bogus"],
        ["verify", "--ladder", ""],
        ["verify", "--ladder", "3^x"],
    ],
)
def test_config_errors_exit_1(capsys, argv):
    code, _, err = invoke(capsys, *argv)
    assert code == 1
    assert "error" in err


def test_injected_fault_exits_2(capsys):
    code, out, err = invoke(capsys, "verify", "--ladder", "3^3", "--fault", "s-minus-sign")
    assert code == 2
    assert "FAIL moment routes" in err
    assert json.loads(out)["result"]["passed"] is False


def test_verify_passes(capsys):
    code, out, _ = invoke(capsys, "verify", "--ladder", "3^3")
    assert code == 0


def test_congruence_csv(capsys):
    code, out, _ = invoke(capsys, "congruence", "--p", "5", "--alpha", "3", "--A", "100", "--B", "100", "--out", "csv")
    assert code == 0
    header, row = out.strip().splitlines()
    assert header == "p,alpha,A,B,d0_raw,d1_raw,d2_raw,d0_norm,bound_margin"
    assert row.split(",")[4:7] == ["188", "60", "128"]


def test_output_path_and_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("ORBITLF_OUTDIR", str(tmp_path))
    code, out, _ = invoke(capsys, "orbits", "--p", "5", "--k", "2", "--out", "csv")
    assert code == 0 and out == ""
    assert (tmp_path / "orbits.csv").read_text().startswith("kind,c,kappa,size,residues")
    target = tmp_path / "sub" / "r.json"
    invoke(capsys, "orbits", "--p", "5", "--k", "2", "--output", str(target))
    assert json.loads(target.read_text())["result"]["count"] == 3


def test_env_threads(capsys, monkeypatch):
    monkeypatch.setenv("ORBITLF_THREADS", "3")
    _, out, _ = invoke(capsys, "orbits", "--p", "3", "--k", "2")
    assert json.loads(out)["config"]["workers"] == 3
    monkeypatch.setenv("ORBITLF_THREADS", "x")
    assert invoke(capsys, "orbits", "--p", "3", "--k", "2")[0] == 1


MOMENT = ["moment", "--p", "3", "--k", "5", "--c", "1", "--eta1", "27", "--eta2", "9", "--m1", "2", "--m2", "1"]


def numeric_leaves(node, path=""):
    if isinstance(node, dict):
        for k, v in node.items():
            yield from numeric_leaves(v, f"{path}/{k}")
    elif isinstance(node, list):
        for i, v in enumerate(node):
            yield from numeric_leaves(v, f"{path}/{i}")
    elif isinstance(node, numbers.Number) and not isinstance(node, bool):
        yield path, node


def test_moment_report_contents(capsys):
    code, out, _ = invoke(capsys, *MOMENT)
    assert code == 0
    result = json.loads(out)["result"]
    assert result["moment"]["route_gap"] < 1e-6
    assert len(result["diagonal_sequence"]) == 3


def test_rerun_is_bitwise_identical(capsys):
    first = json.loads(invoke(capsys, *MOMENT)[1])
    second = json.loads(invoke(capsys, *MOMENT)[1])
    assert json.dumps(strip_timing(first), sort_keys=True) == json.dumps(strip_timing(second), sort_keys=True)


def test_worker_counts_agree(capsys):
    one = strip_timing(json.loads(invoke(capsys, *MOMENT, "--workers", "1")[1]))
    eight = strip_timing(json.loads(invoke(capsys, *MOMENT, "--workers", "8")[1]))
    one["config"].pop("workers")
    eight["config"].pop("workers")
    a, b = dict(numeric_leaves(one)), dict(numeric_leaves(eight))
    assert a.keys() == b.keys()
    assert max(abs(a[k] - b[k]) for k in a) <= 1e-10
