"""Command line interface.

Exit status: 0 on success, 1 when a bracket or exact check fails, 2 on
usage errors (bad arguments, unreadable or invalid domains).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import conformal as cf
from . import harness as hs
from . import surgery as sg
from .domain import DomainError, Quadrilateral, arc, is_simply_connected, load_domain, save_domain
from .generators import FAMILIES, generate, parse_params
from .graph_core import GraphError, validate_assumptions
from .montecarlo import estimate_hm, intersection_ball_probability, intersection_probability
from .potential import (SolverError, greens_function, harmonic_measure, partition_Z, partition_Z_arcs, ratio_R,
                        z_to_points)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _ints(text: str, n: int | None = None) -> list[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma separated integers, got {text!r}") from None
    if n is not None and len(out) != n:
        raise UsageError(f"expected {n} integers, got {len(out)}")
    return out


def _arc(dom, text: str) -> list[int]:
    i, j = _ints(text, 2)
    for x in (i, j):
        if not 0 <= x < dom.n_boundary:
            raise UsageError(f"boundary index {x} out of range 0..{dom.n_boundary - 1}")
    return list(arc(dom, i, j).indices)


def _load(path: str):
    try:
        return load_domain(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read domain {path}: {exc}") from None


def _quad(dom, marks: str | None) -> Quadrilateral:
    if not is_simply_connected(dom):
        raise UsageError("the domain is not simply connected; quadrilateral invariants need a simply connected domain")
    if marks:
        return Quadrilateral(dom, *_ints(marks, 4))
    if "quad" not in dom.meta:
        raise UsageError("no --quad given and the domain has no stored quadrilateral")
    return Quadrilateral(dom, *[int(x) for x in dom.meta["quad"]])


def _anchor(dom, u: int | None) -> int:
    if u is not None:
        return u
    if "anchor" not in dom.meta:
        raise UsageError("no --u given and the domain has no stored anchor")
    return int(dom.meta["anchor"])


def _emit(result: dict, out: str | None, lines: list[str]) -> None:
    if out:
        Path(out).write_text(json.dumps(result, indent=1, sort_keys=True, default=_default))
    for line in lines:
        print(line)


def _default(obj):
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    dom = generate(args.family, parse_params(args.params), args.seed)
    if args.out:
        save_domain(dom, args.out)
    print(f"{args.family}: {dom.n_interior} interior vertices, {dom.n_boundary} boundary points, "
          f"quad={list(dom.meta['quad'])}, anchor={dom.meta['anchor']}")
    return EXIT_OK


def cmd_validate(args) -> int:
    dom = _load(args.domain)
    rep = validate_assumptions(dom.graph, seed=args.seed)
    res = {"structure": rep._asdict(), "n_interior": dom.n_interior, "n_boundary": dom.n_boundary,
           "contours": len(dom.contours), "simply_connected": is_simply_connected(dom)}
    _emit(res, args.out, [f"{k} = {v}" for k, v in res["structure"].items()] +
          [f"simply_connected = {res['simply_connected']}"])
    return EXIT_OK


def cmd_solve(args) -> int:
    dom = _load(args.domain)
    op = args.op
    res: dict = {"op": op}
    if op in ("hm", "green") or (op == "Z" and args.arc and not args.arc2):
        u = _anchor(dom, args.u)
        if u not in dom.index:
            raise UsageError(f"{u} is not an interior vertex")
        res["u"] = u
    if op == "hm":
        E = _arc(dom, _need(args.arc, "--arc"))
        res["value"] = harmonic_measure(dom, u, E)
    elif op == "green":
        v = u if args.v is None else args.v
        if v not in dom.index:
            raise UsageError(f"{v} is not an interior vertex")
        g = greens_function(dom, u)
        res.update(v=v, value=g.at(v))
    elif op == "Z":
        A = _arc(dom, _need(args.arc, "--arc"))
        if args.arc2:
            B = _arc(dom, args.arc2)
            if set(A) & set(B):
                raise UsageError("--arc and --arc2 must be disjoint")
            res["value"] = partition_Z_arcs(dom, A, B)
        else:
            res["value"] = float(z_to_points(dom, A)[dom.index[u]])
    else:
        if args.x is None:
            raise UsageError("--op R needs --x")
        A, B = _arc(dom, _need(args.arc, "--arc")), _arc(dom, _need(args.arc2, "--arc2"))
        if args.x in A or args.x in B or set(A) & set(B):
            raise UsageError("--x must lie off two disjoint arcs")
        res.update(x=args.x, value=ratio_R(dom, args.x, A, B))
    _emit(res, args.out, [f"{op} = {res['value']:.12g}"])
    return EXIT_OK


def _need(value, flag: str):
    if value is None:
        raise UsageError(f"{flag} is required for this operation")
    return value


def cmd_invariants(args) -> int:
    dom = _load(args.domain)
    quad = _quad(dom, args.quad)
    rep = cf.invariant_report(quad)
    res = rep.to_dict()
    res["marks"] = list(quad.marks)
    _emit(res, args.out, [f"{k} = {res[k]:.12g}" for k in ("Z", "X", "Y", "EL", "Z_dual", "Y_dual", "EL_dual")] +
          [f"flags: {', '.join(k for k, v in rep.flags.items() if v) or 'none'}"])
    return EXIT_OK


def cmd_separator(args) -> int:
    dom = _load(args.domain)
    A, B = _arc(dom, args.A), _arc(dom, args.B)
    split = sg.separator_split(dom, A, B, args.k)
    res = {"k": args.k, "usable": split.usable, "reason": split.reason, "slit": [list(e) for e in split.slit],
           "size_A": len(split.interior_A), "size_B": len(split.interior_B)}
    lines = [f"|part A| = {res['size_A']}, |part B| = {res['size_B']}, slit edges = {len(split.slit)}"]
    if not split.usable:
        _emit(res, args.out, lines + [f"unusable: {split.reason}"])
        return EXIT_OK
    Z, ZA, ZB = sg.separator_partitions(split)
    f1, f2 = sg.separator_verify(split)
    res.update(Z=Z, Z_A=ZA, Z_B=ZB, factor_ratio=f1, level_ratio=f2)
    br = hs.default_brackets()
    ok = br["separator_factor"].contains(f1) and br["separator_level"].contains(f2)
    res["within_brackets"] = ok
    _emit(res, args.out, lines + [f"Z/(Z_A Z_B) = {f1:.6g}", f"(Z_A/Z_B)/k = {f2:.6g}"])
    return EXIT_OK if ok else EXIT_FAIL


def cmd_annulus_el(args) -> int:
    dom = _load(args.domain)
    u = _anchor(dom, args.u)
    E = _arc(dom, args.arc)
    ann = sg.annulus(dom, u, args.rho0)
    res = {"u": u, "rho0": args.rho0, "doubly_connected": ann.doubly_connected, "fallback": ann.fallback}
    lhs, EL = sg.log_hm_vs_el(dom, u, E, args.rho0, ann=ann)
    omega, Zc = sg.hm_via_annulus(dom, u, E, args.rho0, ann=ann)
    res.update(omega=omega, Z_annulus=Zc, log_hm=lhs, EL=EL, ratio=lhs / EL)
    ok = True
    lines = [f"omega = {omega:.6g}, log(1+1/omega) = {lhs:.6g}, EL = {EL:.6g}, ratio = {lhs / EL:.6g}"]
    if ann.doubly_connected:
        ok = hs.default_brackets()["log_hm_el"].contains(lhs / EL)
        slit = sg.find_slit(ann, E, args.mode)
        res["slit"] = {"mode": slit.mode, "branch": slit.branch, "path": slit.path, "lhs": slit.lhs,
                       "rhs": slit.rhs, "holds": slit.holds}
        lines.append(f"slit ({slit.mode}/{slit.branch}): {slit.lhs:.6g} vs {slit.rhs:.6g} holds={slit.holds}")
        ok = ok and slit.holds
        if slit.cut is not None:
            tri = sg.cut_sandwich(slit.cut, E)
            res["sandwich"] = list(tri)
            ok = ok and sg.sandwich_holds(tri)
            lines.append(f"sandwich: {tri[0]:.6g} <= {tri[1]:.6g} <= {tri[2]:.6g}")
    else:
        lines.append("annulus is not doubly connected; brackets not applicable")
    res["ok"] = ok
    _emit(res, args.out, lines)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_mc(args) -> int:
    dom = _load(args.domain)
    if args.op == "hm":
        u = _anchor(dom, args.u)
        E = _arc(dom, _need(args.arc, "--arc"))
        est = estimate_hm(dom, u, E, args.n, args.seed)
        exact = harmonic_measure(dom, u, E)
        ok = est.within(exact, args.sigma)
    elif args.op == "xsq":
        quad = _quad(dom, args.quad)
        est = intersection_probability(quad, args.n, args.seed)
        exact = cf.cross_ratios(quad).X ** 2
        ok = est.within(exact, args.sigma)
    else:
        u = _anchor(dom, args.u)
        a, b = _ints(_need(args.pair, "--pair"), 2)
        est = intersection_ball_probability(dom, a, b, u, args.n, args.seed)
        za = partition_Z(dom, u, dom.bd(a)).value
        zb = partition_Z(dom, u, dom.bd(b)).value
        exact = za * zb / partition_Z(dom, dom.bd(a), dom.bd(b)).value
        # identity holds up to constants only, so the check is the bracket
        ok = est.estimate > 0 and hs.default_brackets()["ball_identity"].contains(exact / est.estimate)
    z = abs(est.estimate - exact) / est.stderr if est.stderr > 0 else (0.0 if est.estimate == exact else math.inf)
    res = {"op": args.op, "reference": exact, **est.to_dict(), "z_score": z, "ok": ok}
    _emit(res, args.out, [f"estimate = {est.estimate:.6g} +- {est.stderr:.2g}, reference = {exact:.6g}, z = {z:.2f}"])
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args) -> int:
    spec = hs.CorpusSpec.load(args.spec) if args.spec else hs.default_corpus()
    if args.write_spec:
        spec.save(args.write_spec)
    report = hs.run_corpus(spec, workers=args.workers)
    if args.out:
        jp, cp = report.write(args.out)
        print(f"report written to {jp} and {cp}")
    for name, s in report.summary.items():
        print(f"{name:>20}: n={s['count']:4d} min={s['min']:.4g} max={s['max']:.4g}")
    missing = [k for k, v in report.coverage.items() if not v]
    if missing:
        print(f"checks never exercised: {', '.join(missing)}")
    for f in report.failures:
        lo_hi = "" if f.get("lo") is None else f" bracket [{f['lo']:.4g}, {f['hi']:.4g}]"
        print(f"FAIL {f['id']} {f['check']} value={f.get('value')}{lo_hi} {f.get('detail', '')}")
    print(f"{len(report.records)} configurations, {len(report.failures)} failures")
    return EXIT_OK if report.ok else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="discpot", description="Discrete potential theory toolbox.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, domain=True):
        s = sub.add_parser(name, help=help_, description=help_)
        if domain:
            s.add_argument("--domain", required=True, help="domain JSON file")
        s.add_argument("--out", help="write machine-readable JSON here")
        s.set_defaults(func=fn)
        return s

    s = add("gen", cmd_gen, "Generate a domain from a named family.", domain=False)
    s.add_argument("--family", required=True, choices=sorted(FAMILIES))
    s.add_argument("--params", default="", help="comma separated key=value pairs, e.g. m=3,n=2")
    s.add_argument("--seed", type=int, default=0)

    s = add("validate", cmd_validate, "Report structural constants of the domain's graph.")
    s.add_argument("--seed", type=int, default=0)

    s = add("solve", cmd_solve, "Harmonic measure, Green's function, partition function or boundary ratio.")
    s.add_argument("--op", choices=("hm", "green", "Z", "R"), default="hm")
    s.add_argument("--u", type=int, help="interior vertex id (default: stored anchor)")
    s.add_argument("--v", type=int, help="second interior vertex for --op green")
    s.add_argument("--x", type=int, help="boundary index for --op R")
    s.add_argument("--arc", help="boundary arc as start,end")
    s.add_argument("--arc2", help="second boundary arc as start,end (Z between arcs, or B for R)")

    s = add("invariants", cmd_invariants, "Cross-ratios, partition function and extremal lengths of a quadrilateral.")
    s.add_argument("--quad", "--marks", dest="quad", help="four boundary indices a,b,c,d (default: stored quadrilateral)")

    s = add("separator", cmd_separator, "Split the domain at a level of Z(.;A)/Z(.;B) and check the factorisation.")
    s.add_argument("--A", required=True, help="arc A as start,end")
    s.add_argument("--B", required=True, help="arc B as start,end")
    s.add_argument("--k", type=float, default=1.0)

    s = add("annulus-el", cmd_annulus_el, "Harmonic measure of an arc against the annulus extremal length.")
    s.add_argument("--u", type=int, help="interior vertex id (default: stored anchor)")
    s.add_argument("--arc", required=True, help="boundary arc as start,end")
    s.add_argument("--rho0", type=float, default=sg.DEFAULT_RHO0)
    s.add_argument("--mode", choices=("conjugate_sign", "level_set"), default="conjugate_sign")

    s = add("mc", cmd_mc, "Monte Carlo estimates checked against exact values.")
    s.add_argument("--op", choices=("hm", "xsq", "ball"), default="hm",
                   help="hm: exit frequency of --arc; xsq: path intersection vs X^2; ball: walk meets the inner disc")
    s.add_argument("--u", type=int, help="interior vertex id (default: stored anchor)")
    s.add_argument("--arc", help="boundary arc as start,end")
    s.add_argument("--quad", help="four boundary indices for --op xsq (default: stored quadrilateral)")
    s.add_argument("--pair", help="two boundary indices a,b for --op ball")
    s.add_argument("--n", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--sigma", type=float, default=4.0)

    s = add("verify", cmd_verify, "Run a corpus of configurations against the brackets.", domain=False)
    s.add_argument("--spec", help="corpus spec JSON (default: built-in corpus)")
    s.add_argument("--write-spec", help="also save the spec used")
    s.add_argument("--workers", type=int, default=None, help=f"process count (default: ${hs.WORKERS_ENV} or 1)")
    s.set_defaults(out=None)
    for action in s._actions:
        if action.dest == "out":
            action.help = "directory for report.json and report.csv"
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, DomainError, GraphError, sg.SurgeryError, hs.FitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
