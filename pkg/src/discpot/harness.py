"""Corpus runs: evaluate every comparability check on a list of generated configurations.

A configuration is a generated domain with its landmark quadrilateral.
Each check produces a named value, the bracket it is compared with, and
whether the check applies (its hypotheses hold) and passes.  Brackets are
configuration, not derived constants.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import conformal as cf
from . import surgery as sg
from .domain import DomainError, Quadrilateral, arc
from .generators import generate
from .montecarlo import intersection_ball_probability
from .potential import SolverError, partition_Z, relative_residual, system_matrix

WORKERS_ENV = "DISCPOT_WORKERS"


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    side: str = "both"  # "both", "lower" or "upper"

    def __post_init__(self):
        if not (0 < self.lo <= self.hi < math.inf):
            raise ValueError(f"bracket bounds must be finite and positive, got [{self.lo}, {self.hi}]")
        if self.side not in ("both", "lower", "upper"):
            raise ValueError(f"unknown bracket side {self.side!r}")

    def contains(self, x: float) -> bool:
        if not math.isfinite(x):
            return False
        if self.side == "lower":
            return x >= self.lo
        if self.side == "upper":
            return 0 < x <= self.hi
        return self.lo <= x <= self.hi


def default_brackets() -> dict[str, Bracket]:
    return {
        "three_point": Bracket(1 / 64, 64),
        "xy_relation": Bracket(1 / 8, 8),
        "z_over_x": Bracket(1 / 64, 64, "lower"),
        "z_over_y": Bracket(1 / 64, 64, "upper"),
        "z_log_y": Bracket(1 / 32, 32),
        "el_duality": Bracket(1 / 16, 16),
        "z_el_upper": Bracket(1 / 8, 8, "upper"),
        "z_el": Bracket(1 / 8, 8),
        # Z carries the two endpoint masses (16 on the square lattice), so the scale is wider
        "regime_z_y": Bracket(1 / 256, 256),
        "regime_log_y_el": Bracket(1 / 16, 16),
        "separator_factor": Bracket(1 / 32, 32),
        "separator_level": Bracket(1 / 32, 32),
        "log_hm_el": Bracket(1 / 16, 16),
        "hm_annulus": Bracket(1 / 64, 64),
        "ball_identity": Bracket(1 / 64, 64),
    }


#: checks that are exact inequalities or set identities rather than brackets
EXACT_CHECKS = ("r_monotone", "separator_nesting", "cut_sandwich", "slit_el", "cross_ratio_order")

#: what each check compares, in words
DESCRIPTIONS = {
    "three_point": "Z(a;[bc]) against sqrt(Z(a;b) Z(a;c) / Z(b;c))",
    "xy_relation": "1/X against 1 + 1/Y",
    "z_over_x": "Z([ab];[cd]) bounded below by X",
    "z_over_y": "Z([ab];[cd]) bounded above by Y",
    "z_log_y": "Z([ab];[cd]) against log(1 + Y), when EL([bc];[da]) is bounded",
    "el_duality": "product of the two conjugate extremal lengths",
    "z_el_upper": "Z([ab];[cd]) bounded above by 1/EL",
    "z_el": "Z([ab];[cd]) against 1/EL, when EL is bounded",
    "regime_z_y": "Z against Y when EL is bounded below",
    "regime_log_y_el": "log(1 + 1/Y) against EL when EL is bounded below",
    "separator_factor": "Z(A;B) against the product of the two part partition functions through the slit",
    "separator_level": "ratio of the two part partition functions against the level k",
    "log_hm_el": "log(1 + 1/harmonic measure) against the annulus extremal length",
    "hm_annulus": "harmonic measure against Z from the inner annulus boundary",
    "ball_identity": "Z(u;a) Z(u;b) / Z(a;b) against P[walk a->b meets the inner disc of u]",
    "r_monotone": "R = Z(.;A)/Z(.;B) monotone along both complementary arcs",
    "separator_nesting": "separator inclusions when the second arc grows",
    "cut_sandwich": "Z from the inner boundary squeezed between the cut-domain partition functions",
    "slit_el": "extremal length after cutting along the slit",
    "cross_ratio_order": "X <= 1 and X <= Y",
}

#: every check the default corpus must exercise at least once
COVERAGE = tuple(default_brackets()) + EXACT_CHECKS

#: gates for checks whose hypotheses involve a size condition
GATES = {"z_log_y_dual_el_max": 4.0, "z_el_el_max": 1.0, "regime_el_min": 0.5, "separator_K": 4.0,
         "separator_levels": (0.25, 1.0, 4.0)}


@dataclass
class ConfigSpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    marks: tuple | None = None
    anchor: int | None = None
    mc_samples: int = 0

    @property
    def id(self) -> str:
        p = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        m = "" if self.marks is None else "@" + "-".join(str(x) for x in self.marks)
        return f"{self.family}({p})#{self.seed}{m}"


@dataclass
class CorpusSpec:
    configs: list[ConfigSpec]
    brackets: dict[str, Bracket] = field(default_factory=default_brackets)
    seed: int = 0
    rho0: float = sg.DEFAULT_RHO0

    def to_dict(self) -> dict:
        return {"seed": self.seed, "rho0": self.rho0,
                "brackets": {k: [b.lo, b.hi, b.side] for k, b in self.brackets.items()},
                "configs": [asdict(c) for c in self.configs]}

    @classmethod
    def from_dict(cls, data: dict) -> "CorpusSpec":
        br = default_brackets()
        for k, v in data.get("brackets", {}).items():
            br[k] = Bracket(float(v[0]), float(v[1]), v[2] if len(v) > 2 else "both")
        cfgs = []
        for c in data["configs"]:
            c = dict(c)
            if c.get("marks") is not None:
                c["marks"] = tuple(c["marks"])
            cfgs.append(ConfigSpec(**c))
        return cls(cfgs, br, int(data.get("seed", 0)), float(data.get("rho0", sg.DEFAULT_RHO0)))

    @classmethod
    def load(cls, path) -> "CorpusSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


def default_corpus() -> CorpusSpec:
    """About sixty configurations over all generator families."""
    cfgs: list[ConfigSpec] = [ConfigSpec("plus", mc_samples=20000)]
    for m, n in [(2, 2), (3, 2), (4, 4), (6, 3), (3, 6), (8, 4), (2, 10), (10, 2), (1, 12), (12, 12),
                 (20, 5), (5, 20), (30, 30), (60, 20), (99, 99)]:
        cfgs.append(ConfigSpec("rect", {"m": m, "n": n}, mc_samples=20000 if m * n <= 40 else 0))
    for k in (3, 5, 7, 9, 15):
        cfgs.append(ConfigSpec("square_sym", {"k": k}))
    for length in (5, 10, 20, 40):
        cfgs.append(ConfigSpec("fjord", {"width": 1, "length": length}))
    for width, length in [(2, 10), (3, 12), (2, 25)]:
        cfgs.append(ConfigSpec("fjord", {"width": width, "length": length}))
    for w in (1, 2, 3, 5):
        cfgs.append(ConfigSpec("bottleneck", {"w": w}))
    cfgs.append(ConfigSpec("bottleneck", {"w": 1, "size": 11, "neck": 6}))
    for seed in range(6):
        cfgs.append(ConfigSpec("perturbed_grid", {"m": 8 + 2 * seed, "n": 6 + seed, "amplitude": 0.2,
                                                  "weight_jitter": 0.5}, seed=seed))
    for seed in range(3):
        cfgs.append(ConfigSpec("perturbed_grid", {"m": 25, "n": 10, "amplitude": 0.25, "weight_jitter": 0.3}, seed=seed))
    for turns, width in [(1, 1), (2, 1), (1, 2), (2, 2), (3, 1)]:
        cfgs.append(ConfigSpec("spiral", {"turns": turns, "width": width}))
    for seed in range(3):
        cfgs.append(ConfigSpec("rect", {"m": 12, "n": 7, "amplitude": 0.2, "weight_jitter": 0.6}, seed=seed))
    # rotated quadrilaterals on a few domains
    for fam, params in [("rect", {"m": 8, "n": 4}), ("fjord", {"width": 1, "length": 10}),
                        ("bottleneck", {"w": 2}), ("spiral", {"turns": 2, "width": 1})]:
        cfgs.append(ConfigSpec(fam, params, marks=("rotate",)))
    for fam, params in [("rect", {"m": 6, "n": 6}), ("square_sym", {"k": 6})]:
        cfgs.append(ConfigSpec(fam, params, marks=("corners",)))
    return CorpusSpec(cfgs)


# ---------------------------------------------------------------------------
# evaluation of one configuration


def _quad(dom, cfg: ConfigSpec) -> Quadrilateral:
    a, b, c, d = dom.meta["quad"]
    if cfg.marks is None:
        return Quadrilateral(dom, a, b, c, d)
    if cfg.marks == ("rotate",):
        return Quadrilateral(dom, a, b, c, d).rotated()
    if cfg.marks == ("corners",):
        arcs = dom.meta["arcs"]
        return Quadrilateral(dom, arcs["bottom"][0], arcs["right"][0], arcs["top"][0], arcs["left"][0])
    return Quadrilateral(dom, *[int(x) for x in cfg.marks])


class _Checks:
    def __init__(self, brackets):
        self.brackets = brackets
        self.rows: list[dict] = []

    def bracket(self, name, value, applicable=True, detail=""):
        b = self.brackets[name]
        ok = b.contains(value) if applicable else None
        self.rows.append({"check": name, "value": _num(value), "lo": b.lo, "hi": b.hi, "side": b.side,
                          "applicable": bool(applicable), "passed": ok, "detail": detail})

    def exact(self, name, ok, value=math.nan, applicable=True, detail=""):
        self.rows.append({"check": name, "value": _num(value), "lo": None, "hi": None, "side": "exact",
                          "applicable": bool(applicable), "passed": bool(ok) if applicable else None,
                          "detail": detail})


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def evaluate_config(cfg: ConfigSpec, brackets: dict[str, Bracket], rho0: float = sg.DEFAULT_RHO0,
                    seed: int = 0) -> dict:
    """All values and checks for one configuration; errors are recorded, not raised."""
    rec: dict[str, Any] = {"id": cfg.id, "family": cfg.family, "params": dict(cfg.params), "seed": cfg.seed,
                           "config": asdict(cfg)}
    t0 = time.perf_counter()
    try:
        _evaluate(cfg, brackets, rho0, seed, rec)
        rec["error"] = None
    except (DomainError, SolverError, sg.SurgeryError, ValueError, RuntimeError) as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
        rec.setdefault("checks", [])
    rec["timing"] = time.perf_counter() - t0
    return rec


def _evaluate(cfg, brackets, rho0, seed, rec):
    dom = generate(cfg.family, cfg.params, cfg.seed)
    quad = _quad(dom, cfg)
    a, b, c, d = quad.marks
    rec["marks"] = [a, b, c, d]
    rec["n_interior"] = dom.n_interior
    chk = _Checks(brackets)
    rep = cf.invariant_report(quad)
    rec["values"] = {k: _num(v) for k, v in rep.to_dict().items() if not isinstance(v, dict)}
    rec["ratios"] = {k: _num(v) for k, v in rep.ratios.items()}
    rec["flags"] = rep.flags
    rec["dual_product"] = _num(rep.EL * rep.EL_dual_network)

    # residual of the Laplacian solve behind Z
    h = cf.z_to_points(dom, quad.cd.indices)
    mat = system_matrix(dom)
    rhs = mat @ h
    rec["residual"] = _num(relative_residual(mat, h, rhs))

    chk.exact("cross_ratio_order", rep.X <= 1 + 1e-12 and rep.X <= rep.Y * (1 + 1e-12), rep.X / rep.Y)
    up, down = cf.r_monotonicity(dom, quad.ab.indices, quad.cd.indices)
    chk.exact("r_monotone", max(up, down) <= 1e-12, max(up, down))

    for p, q_, r in ((a, b, c), (b, c, d), (c, d, a), (d, a, b)):
        chk.bracket("three_point", cf.zfact_ratio(dom, p, q_, r), detail=f"{p};[{q_},{r}]")
    chk.bracket("xy_relation", rep.ratios["xy_relation"])
    chk.bracket("z_over_x", rep.ratios["z_over_x"])
    chk.bracket("z_over_y", rep.ratios["z_over_y"])
    chk.bracket("z_log_y", rep.ratios["z_log_y"], applicable=rep.EL_dual <= GATES["z_log_y_dual_el_max"],
                detail=f"EL(bc;da)={rep.EL_dual:.4g}")
    chk.bracket("el_duality", rep.ratios["duality_product"])
    chk.bracket("z_el_upper", rep.ratios["z_el"])
    chk.bracket("z_el", rep.ratios["z_el"], applicable=rep.EL <= GATES["z_el_el_max"], detail=f"EL={rep.EL:.4g}")
    regime = rep.EL >= GATES["regime_el_min"]
    chk.bracket("regime_z_y", rep.ratios["z_over_y"], applicable=regime, detail=f"EL={rep.EL:.4g}")
    chk.bracket("regime_log_y_el", rep.ratios["log_inv_y_over_el"], applicable=regime, detail=f"EL={rep.EL:.4g}")

    _separator_checks(dom, quad, rep, chk, rec)
    _annulus_checks(dom, quad, cfg, chk, rec, rho0)
    if cfg.mc_samples:
        _ball_check(dom, quad, cfg, chk, rec, seed)
    rec["checks"] = chk.rows


def _separator_checks(dom, quad, rep, chk, rec):
    A, B = quad.ab.indices, quad.cd.indices
    hyp = rep.Z <= GATES["separator_K"]
    seps = []
    for k in GATES["separator_levels"]:
        split = sg.separator_split(dom, A, B, k)
        row = {"k": k, "usable": split.usable, "covers_A": split.covers_A, "covers_B": split.covers_B,
               "slit": len(split.slit)}
        applicable = hyp and split.usable
        if split.usable:
            f1, f2 = sg.separator_verify(split)
            row.update(factor=_num(f1), level=_num(f2))
        else:
            f1 = f2 = math.nan
        chk.bracket("separator_factor", f1, applicable, detail=f"k={k}")
        chk.bracket("separator_level", f2, applicable, detail=f"k={k}")
        seps.append(row)
    rec["separator"] = seps
    # nesting: A, then the far arc split into two consecutive pieces B, C
    far = list(B)
    if len(far) >= 2:
        half = len(far) // 2
        Bp, Cp = far[:half], far[half:]
        gaps = [sorted(_open(dom, A[-1], Bp[0])), sorted(_open(dom, Cp[-1], A[0]))]
        xs = [g[len(g) // 2] for g in gaps if g]
        ok = all(sg.separator_inclusion_check(dom, list(A), Bp, Cp, x) for x in xs)
        chk.exact("separator_nesting", ok, applicable=bool(xs), detail=f"x={xs}")


def _open(dom, a, b):
    out, i = [], dom.succ(a)
    while i != b:
        out.append(i)
        i = dom.succ(i)
    return out


def _annulus_checks(dom, quad, cfg, chk, rec, rho0):
    u = cfg.anchor if cfg.anchor is not None else dom.meta["anchor"]
    arcs = {"ab": quad.ab.indices, "cd": quad.cd.indices}
    rows = []
    try:
        ann = sg.annulus(dom, u, rho0)
    except sg.SurgeryError as exc:
        for name in arcs:
            for check in ("log_hm_el", "hm_annulus"):
                chk.bracket(check, math.nan, False, detail=f"{name}: {exc}")
        rec["annulus"] = [{"arc": name, "error": str(exc)} for name in arcs]
        return
    for name, arc_idx in arcs.items():
        row = {"arc": name, "doubly_connected": ann.doubly_connected, "green_on_C": list(ann.green_on_C)}
        if not ann.doubly_connected or not ann.lift(arc_idx):
            chk.bracket("log_hm_el", math.nan, False, detail=name)
            chk.bracket("hm_annulus", math.nan, False, detail=name)
            rows.append(row)
            continue
        omega, Zc = sg.hm_via_annulus(dom, u, arc_idx, ann=ann)
        lhs, EL = sg.log_hm_vs_el(dom, u, arc_idx, ann=ann)
        row.update(omega=_num(omega), Z_annulus=_num(Zc), log_hm=_num(lhs), EL=_num(EL))
        chk.bracket("hm_annulus", omega / Zc if Zc > 0 else math.nan, detail=name)
        chk.bracket("log_hm_el", lhs / EL, detail=name)
        for mode in ("conjugate_sign", "level_set"):
            try:
                res = sg.find_slit(ann, arc_idx, mode)
            except sg.SurgeryError as exc:
                chk.exact("slit_el", False, applicable=True, detail=f"{name}/{mode}: {exc}")
                continue
            chk.exact("slit_el", res.holds, res.lhs / res.rhs, detail=f"{name}/{mode}/{res.branch}")
            if res.cut is not None:
                tri = sg.cut_sandwich(res.cut, arc_idx)
                chk.exact("cut_sandwich", sg.sandwich_holds(tri), tri[1], detail=f"{name}/{mode}")
                row[mode] = {"path_length": len(res.path), "sandwich": [_num(x) for x in tri]}
        rows.append(row)
    rec["annulus"] = rows


def _ball_check(dom, quad, cfg, chk, rec, seed):
    a, _, c, _ = quad.marks
    u = cfg.anchor if cfg.anchor is not None else dom.meta["anchor"]
    Zua = partition_Z(dom, u, dom.bd(a)).value
    Zuc = partition_Z(dom, u, dom.bd(c)).value
    Zac = partition_Z(dom, dom.bd(a), dom.bd(c)).value
    est = intersection_ball_probability(dom, a, c, u, cfg.mc_samples, seed=seed)
    lhs = Zua * Zuc / Zac
    rec["ball"] = {"lhs": lhs, **est.to_dict()}
    chk.bracket("ball_identity", lhs / est.estimate if est.estimate > 0 else math.nan)


# ---------------------------------------------------------------------------
# corpus runs


@dataclass
class RatioReport:
    records: list[dict]
    summary: dict
    failures: list[dict]
    coverage: dict

    @property
    def ok(self) -> bool:
        return not self.failures and all(self.coverage.values())

    def body(self) -> dict:
        """Report without timings, for comparisons between runs."""
        recs = [{k: v for k, v in r.items() if k != "timing"} for r in self.records]
        return {"records": recs, "summary": self.summary, "failures": self.failures, "coverage": self.coverage}

    def to_dict(self) -> dict:
        out = self.body()
        out["timings"] = {r["id"]: r["timing"] for r in self.records}
        return out

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        jp, cp = out / "report.json", out / "report.csv"
        jp.write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))
        cp.write_text(report_csv(self))
        return jp, cp

    def check_names(self) -> list[str]:
        return sorted({c["check"] for r in self.records for c in r.get("checks", [])})


CSV_VALUES = ("Z", "X", "Y", "EL", "Z_dual", "Y_dual", "EL_dual", "EL_dual_network")


def report_csv(report: RatioReport) -> str:
    names = list(COVERAGE)
    ratio_names = sorted({k for r in report.records for k in r.get("ratios", {})})
    header = ["id", "family", "n_interior", "error"] + list(CSV_VALUES) + ratio_names + \
        [f"worst_{n}" for n in names] + [f"pass_{n}" for n in names]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in report.records:
        vals = r.get("values", {})
        rat = r.get("ratios", {})
        row = [r["id"], r["family"], r.get("n_interior", ""), r.get("error") or ""]
        row += [_fmt(vals.get(k)) for k in CSV_VALUES] + [_fmt(rat.get(k)) for k in ratio_names]
        worst, passed = [], []
        for n in names:
            rows = [c for c in r.get("checks", []) if c["check"] == n and c["applicable"]]
            vs = [c["value"] for c in rows if c["value"] is not None]
            worst.append(_fmt(_extreme(vs)) if vs else "")
            passed.append("" if not rows else str(all(c["passed"] for c in rows)))
        w.writerow(row + worst + passed)
    return buf.getvalue()


def _fmt(x):
    return "" if x is None else repr(float(x))


def _extreme(vs):
    """Value farthest from one on a log scale."""
    vs = [v for v in vs if v > 0]
    return max(vs, key=lambda v: abs(math.log(v))) if vs else None


def summarize(records: list[dict]) -> tuple[dict, list[dict], dict]:
    per: dict[str, list[float]] = {}
    failures, seen = [], {n: False for n in COVERAGE}
    for r in records:
        if r.get("error"):
            failures.append({"id": r["id"], "check": "error", "detail": r["error"], "config": r["config"]})
        for c in r.get("checks", []):
            if not c["applicable"]:
                continue
            seen[c["check"]] = True
            if c["value"] is not None:
                per.setdefault(c["check"], []).append(c["value"])
            if not c["passed"]:
                failures.append({"id": r["id"], "check": c["check"], "value": c["value"], "lo": c["lo"],
                                 "hi": c["hi"], "detail": c["detail"], "config": r["config"]})
    summary = {}
    for name, vs in sorted(per.items()):
        arr = np.array(vs)
        pos = arr[arr > 0]
        summary[name] = {"description": DESCRIPTIONS.get(name, ""), "count": len(arr),
                         "min": float(arr.min()), "max": float(arr.max()),
                         "geomean": float(np.exp(np.mean(np.log(pos)))) if len(pos) else None}
    return summary, failures, seen


def run_corpus(spec: CorpusSpec, workers: int | None = None) -> RatioReport:
    """Evaluate every configuration; the record order follows the spec."""
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    args = [(c, spec.brackets, spec.rho0, spec.seed) for c in spec.configs]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            records = list(ex.map(_eval_star, args))
    else:
        records = [_eval_star(a) for a in args]
    summary, failures, seen = summarize(records)
    return RatioReport(records, summary, failures, seen)


def _eval_star(args):
    return evaluate_config(*args)


# ---------------------------------------------------------------------------
# exponential fit


class FitError(ValueError):
    pass


def fit_exponential(report: RatioReport, family: str, residual_cap: float = 0.1,
                    where=None) -> tuple[float, float, float]:
    """Least-squares fit of ``-log Z`` against ``EL`` over one family.

    Returns ``(slope, intercept, relative residual)`` where the residual is
    ``|y - fit| / |y|`` in the Euclidean norm.  Raises :class:`FitError` on
    fewer than four points, no spread in ``EL``, a nonpositive slope, or a
    residual above ``residual_cap``.
    """
    pts = [(r["values"]["EL"], -math.log(r["values"]["Z"])) for r in report.records
           if r["family"] == family and not r.get("error") and (where is None or where(r))]
    return fit_points(pts, residual_cap)


def fit_points(pts, residual_cap: float = 0.1) -> tuple[float, float, float]:
    if len(pts) < 4:
        raise FitError(f"insufficient points: need at least 4, got {len(pts)}")
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    if np.ptp(x) <= 1e-9 * max(1.0, float(np.abs(x).max())):
        raise FitError("insufficient spread in EL")
    slope, intercept = np.polyfit(x, y, 1)
    res = float(np.linalg.norm(y - (slope * x + intercept)) / np.linalg.norm(y))
    if slope <= 0:
        raise FitError(f"slope {slope:.4g} is not positive")
    if res > residual_cap:
        raise FitError(f"relative residual {res:.3g} above cap {residual_cap}")
    return float(slope), float(intercept), res


__all__ = [
    "Bracket", "COVERAGE", "ConfigSpec", "CorpusSpec", "FitError", "RatioReport", "default_brackets",
    "default_corpus", "evaluate_config", "fit_exponential", "fit_points", "report_csv", "run_corpus",
    "summarize",
]
