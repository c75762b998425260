import json
import shutil
import subprocess

import pytest

from discpot import harness as hs
from discpot.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from discpot.domain import load_domain, make_domain, save_domain
from discpot.graph_core import lattice_graph


@pytest.fixture(scope="module")
def rect_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("dom") / "rect.json"
    assert main(["gen", "--family", "rect", "--params", "m=8,n=4", "--out", str(path)]) == EXIT_OK
    return path


@pytest.fixture(scope="module")
def square_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("dom") / "square.json"
    assert main(["gen", "--family", "rect", "--params", "m=9,n=9", "--out", str(path)]) == EXIT_OK
    return path


def run_json(args, tmp_path):
    out = tmp_path / "out.json"
    code = main(args + ["--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_gen_round_trip(rect_file):
    dom = load_domain(rect_file)
    assert dom.n_interior == 32
    assert tuple(dom.meta["quad"]) == (20, 23, 8, 11)


def test_validate(rect_file, tmp_path):
    code, res = run_json(["validate", "--domain", str(rect_file)], tmp_path)
    assert code == EXIT_OK
    assert res["structure"]["varpi0"] == pytest.approx(0.25)
    assert res["simply_connected"]


@pytest.mark.parametrize("extra", [
    ["--op", "hm", "--arc", "20,23"],
    ["--op", "green"],
    ["--op", "Z", "--arc", "20,23", "--arc2", "8,11"],
    ["--op", "Z", "--arc", "20,23"],
    ["--op", "R", "--x", "0", "--arc", "20,23", "--arc2", "8,11"],
])
def test_solve_ops(rect_file, tmp_path, extra):
    code, res = run_json(["solve", "--domain", str(rect_file)] + extra, tmp_path)
    assert code == EXIT_OK
    assert res["value"] > 0


def test_invariants_and_alias(rect_file, tmp_path):
    code, res = run_json(["invariants", "--domain", str(rect_file)], tmp_path)
    assert code == EXIT_OK and res["EL"] == pytest.approx(2.25)
    code2, res2 = run_json(["invariants", "--domain", str(rect_file), "--marks", "20,23,8,11"], tmp_path)
    assert code2 == EXIT_OK and res2["Z"] == pytest.approx(res["Z"])


def test_separator(rect_file, tmp_path):
    code, res = run_json(["separator", "--domain", str(rect_file), "--A", "20,23", "--B", "8,11"], tmp_path)
    assert code == EXIT_OK and res["usable"] and res["within_brackets"]


def test_annulus_el(square_file, tmp_path):
    for mode in ("conjugate_sign", "level_set"):
        code, res = run_json(["annulus-el", "--domain", str(square_file), "--arc", "9,17", "--rho0", "0.5",
                              "--mode", mode], tmp_path)
        assert code == EXIT_OK and res["ok"] and res["slit"]["holds"]


@pytest.mark.parametrize("extra", [
    ["--op", "hm", "--arc", "20,23", "--n", "4000"],
    ["--op", "xsq", "--n", "2000"],
    ["--op", "ball", "--pair", "20,8", "--n", "2000"],
])
def test_mc(rect_file, tmp_path, extra):
    code, res = run_json(["mc", "--domain", str(rect_file)] + extra, tmp_path)
    assert code == EXIT_OK and res["ok"]


def test_usage_errors(rect_file, tmp_path, capsys):
    assert main(["solve", "--domain", str(tmp_path / "missing.json")]) == EXIT_USAGE
    assert main(["solve", "--domain", str(rect_file), "--op", "hm"]) == EXIT_USAGE
    assert main(["solve", "--domain", str(rect_file), "--op", "hm", "--arc", "1,999"]) == EXIT_USAGE
    assert main(["invariants", "--domain", str(rect_file), "--quad", "1,2"]) == EXIT_USAGE
    assert main(["bogus"]) == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_holed_domain_is_a_usage_error(tmp_path):
    g, ids = lattice_graph(range(-2, 5), range(-2, 5))
    dom = make_domain(g, [ids[(x, y)] for x in range(3) for y in range(3) if (x, y) != (1, 1)])
    path = tmp_path / "ring.json"
    save_domain(dom, path)
    assert main(["invariants", "--domain", str(path), "--quad", "0,1,2,3"]) == EXIT_USAGE
    assert main(["validate", "--domain", str(path)]) == EXIT_OK


def test_verify_on_small_spec(tmp_path):
    spec = hs.CorpusSpec([hs.ConfigSpec("rect", {"m": 4, "n": 3}), hs.ConfigSpec("plus")])
    spec_path = tmp_path / "spec.json"
    spec.save(spec_path)
    out = tmp_path / "report"
    code = main(["verify", "--spec", str(spec_path), "--out", str(out)])
    report = json.loads((out / "report.json").read_text())
    assert (out / "report.csv").exists()
    assert code == (EXIT_OK if not report["failures"] and all(report["coverage"].values()) else EXIT_FAIL)
    # a two-configuration corpus cannot exercise every check
    assert code == EXIT_FAIL


def test_verify_fails_on_tight_bracket(tmp_path):
    spec = hs.CorpusSpec([hs.ConfigSpec("rect", {"m": 4, "n": 3})])
    spec.brackets["xy_relation"] = hs.Bracket(0.999, 1.001)
    spec_path = tmp_path / "spec.json"
    spec.save(spec_path)
    assert main(["verify", "--spec", str(spec_path)]) == EXIT_FAIL


@pytest.mark.skipif(shutil.which("discpot") is None, reason="console script not installed")
def test_console_script(tmp_path):
    path = tmp_path / "p.json"
    done = subprocess.run(["discpot", "gen", "--family", "plus", "--out", str(path)], capture_output=True, text=True)
    assert done.returncode == 0 and "1 interior" in done.stdout
    done = subprocess.run(["discpot", "invariants", "--domain", str(path)], capture_output=True, text=True)
    assert done.returncode == 0 and "Z = 0.0625" in done.stdout
