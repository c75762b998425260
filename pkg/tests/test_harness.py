import csv
import io
import json
import math

import pytest

from discpot import harness as hs


def small_spec(**brackets) -> hs.CorpusSpec:
    br = hs.default_brackets()
    br.update(brackets)
    cfgs = [hs.ConfigSpec("plus", mc_samples=2000), hs.ConfigSpec("rect", {"m": 4, "n": 3}),
            hs.ConfigSpec("rect", {"m": 8, "n": 4}, marks=("rotate",)),
            hs.ConfigSpec("square_sym", {"k": 5}, marks=("corners",)),
            hs.ConfigSpec("bottleneck", {"w": 2})]
    return hs.CorpusSpec(cfgs, br)


@pytest.fixture(scope="module")
def report():
    return hs.run_corpus(small_spec(), workers=1)


def test_bracket_sides():
    b = hs.Bracket(0.5, 2.0)
    assert b.contains(1.0) and not b.contains(3.0) and not b.contains(0.1)
    assert hs.Bracket(0.5, 2.0, "lower").contains(100.0)
    assert hs.Bracket(0.5, 2.0, "upper").contains(1e-9)
    assert not hs.Bracket(0.5, 2.0).contains(math.nan)


def test_config_ids():
    assert hs.ConfigSpec("rect", {"n": 2, "m": 3}).id == "rect(m=3,n=2)#0"
    assert hs.ConfigSpec("rect", {"m": 3}, marks=("rotate",)).id == "rect(m=3)#0@rotate"


def test_spec_round_trip(tmp_path):
    spec = small_spec()
    path = tmp_path / "spec.json"
    spec.save(path)
    back = hs.CorpusSpec.load(path)
    assert back.to_dict() == spec.to_dict()
    assert back.configs[2].marks == ("rotate",)


def test_default_corpus_is_broad():
    spec = hs.default_corpus()
    families = {c.family for c in spec.configs}
    assert families == {"plus", "rect", "square_sym", "fjord", "bottleneck", "perturbed_grid", "spiral"}
    assert len(spec.configs) >= 50
    assert len({c.id for c in spec.configs}) == len(spec.configs)


def test_records_carry_values_and_checks(report):
    assert len(report.records) == 5
    for r in report.records:
        assert not r.get("error"), r.get("error")
        assert {"Z", "X", "Y", "EL"} <= set(r["values"])
        assert r["checks"]
    names = set(report.check_names())
    assert {"three_point", "xy_relation", "cross_ratio_order", "r_monotone"} <= names


def test_exact_checks_pass(report):
    for r in report.records:
        for c in r["checks"]:
            if c["side"] == "exact" and c["applicable"]:
                assert c["passed"], (r["id"], c)


def test_summary_matches_records(report):
    for name, s in report.summary.items():
        vals = [c["value"] for r in report.records for c in r["checks"]
                if c["check"] == name and c["applicable"] and c["value"] is not None]
        assert s["count"] == len(vals)
        assert s["min"] == pytest.approx(min(vals)) and s["max"] == pytest.approx(max(vals))


def test_tight_bracket_is_reported_as_failure():
    spec = small_spec(xy_relation=hs.Bracket(0.999, 1.001))
    rep = hs.run_corpus(spec)
    bad = [f for f in rep.failures if f["check"] == "xy_relation"]
    assert bad and not rep.ok
    assert all("config" in f for f in bad)


def test_body_is_deterministic_across_workers(report):
    again = hs.run_corpus(small_spec(), workers=2)
    assert json.dumps(again.body(), sort_keys=True) == json.dumps(report.body(), sort_keys=True)


def test_report_files(report, tmp_path):
    jp, cp = report.write(tmp_path / "out")
    data = json.loads(jp.read_text())
    assert set(data) == {"records", "summary", "failures", "coverage", "timings"}
    rows = list(csv.reader(io.StringIO(cp.read_text())))
    header = rows[0]
    assert header[:4] == ["id", "family", "n_interior", "error"]
    for name in hs.COVERAGE:
        assert f"worst_{name}" in header and f"pass_{name}" in header
    assert len(rows) == 1 + len(report.records)
    assert len({len(r) for r in rows}) == 1


def test_domain_errors_are_recorded_not_raised():
    spec = hs.CorpusSpec([hs.ConfigSpec("rect", {"m": 3, "n": 3}, marks=(0, 0, 1, 2))])
    rep = hs.run_corpus(spec)
    assert rep.records[0]["error"]
    assert rep.failures[0]["check"] == "error"


def test_fit_points_recovers_line():
    pts = [(x, 2.0 * x + 1.0) for x in (1.0, 2.0, 3.0, 5.0)]
    slope, intercept, res = hs.fit_points(pts)
    assert slope == pytest.approx(2.0) and intercept == pytest.approx(1.0) and res < 1e-12


@pytest.mark.parametrize("pts,msg", [
    ([(1, 1), (2, 2), (3, 3)], "insufficient points"),
    ([(1, 1), (1, 2), (1, 3), (1, 4)], "insufficient spread"),
    ([(1, 4), (2, 3), (3, 2), (4, 1)], "not positive"),
    ([(1, 1), (2, 10), (3, 1), (4, 10)], "residual"),
])
def test_fit_points_errors(pts, msg):
    with pytest.raises(hs.FitError, match=msg):
        hs.fit_points(pts)


def test_fit_exponential_needs_family_points(report):
    with pytest.raises(hs.FitError, match="insufficient points"):
        hs.fit_exponential(report, "fjord")
